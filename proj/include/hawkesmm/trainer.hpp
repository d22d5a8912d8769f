#pragma once

#include "hawkesmm/env.hpp"
#include "hawkesmm/episode.hpp"
#include "hawkesmm/nn.hpp"
#include "hawkesmm/policy.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace hawkesmm {

/// How self-imitation weights a stored transition.
enum class SilWeighting {
    /// 1{R > V}, as in the objective used here.
    Indicator,
    /// (R - V)+, the weighting of the original self-imitation literature.
    ClippedAdvantage,
};

struct TrainerConfig {
    double clip_epsilon{0.2};
    double discount{0.999};
    double gae_lambda{0.95};
    double sil_coef{0.1};
    double entropy_coef{0.01};
    double value_coef{0.5};
    std::size_t epochs{4};
    std::size_t minibatch_size{512};
    std::size_t episodes_per_update{1};
    std::size_t total_episodes{60};
    double learning_rate{3e-4};
    std::vector<std::size_t> hidden{64, 64};
    Activation activation{Activation::Relu};
    std::size_t sil_capacity{50000};
    std::size_t sil_batch_size{256};
    SilWeighting sil_weighting{SilWeighting::Indicator};
    bool normalize_advantages{true};
    /// Rewards are multiplied by this before advantages and returns are formed.
    double reward_scale{0.1};
    /// Per-network gradient norm cap; 0 disables clipping.
    double max_grad_norm{0.5};
    /// Initial bias of the decision logit.
    double initial_decision_bias{0.0};
    /// Number of initial updates during which the decision network is frozen.
    std::size_t freeze_decision_updates{0};
    /// Rollout worker threads (results do not depend on this).
    std::size_t threads{1};
    Ablation ablation{Ablation::None};

    void validate() const;
};

/// One recorded decision with everything the losses need.
struct StepSample {
    std::vector<double> features;
    std::vector<bool> mask;
    bool intervene{false};
    std::size_t action{0};
    double log_prob{0.0};
    double value{0.0};
    double reward{0.0};
    double advantage{0.0};
    double ret{0.0};
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

/// delta_t = r_t + g V_{t+1} - V_t (V_T = 0); A_t = sum_k (g l)^k delta_{t+k}; R_t = A_t + V_t.
[[nodiscard]] GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double discount,
                                    double lambda);

/// Monte-Carlo discounted return-to-go.
[[nodiscard]] std::vector<double> discounted_returns(std::span<const double> rewards, double discount);

/// min(r A, clip(r, 1 - eps, 1 + eps) A).
[[nodiscard]] double clipped_surrogate(double ratio, double advantage, double epsilon) noexcept;

struct PolicyGradients {
    std::vector<double> decision;
    std::vector<double> action;
    std::vector<double> value;

    [[nodiscard]] static PolicyGradients zeros(const PolicyNetworks& nets);
    void add(const PolicyGradients& other, double scale = 1.0);
};

struct LossResult {
    double total{0.0};
    double surrogate{0.0};
    double value_loss{0.0};
    double entropy{0.0};
    double sil{0.0};
    PolicyGradients grad;
};

/// -mean(clipped surrogate) + value_coef * mean((R - V)^2) - entropy_coef * mean(entropy),
/// with exact gradients for all three networks.
[[nodiscard]] LossResult ppo_loss(const PolicyNetworks& nets, std::span<const StepSample> batch,
                                  const TrainerConfig& config);

struct SilEntry {
    std::vector<double> features;
    std::vector<bool> mask;
    bool intervene{false};
    std::size_t action{0};
    double ret{0.0};
    /// R - V at insertion; the lowest priority is evicted first.
    double priority{0.0};
};

/// -mean over entries of w(R, V) * log pi(stored decision and action), V from the current value network.
[[nodiscard]] LossResult sil_loss(const PolicyNetworks& nets, std::span<const SilEntry> batch,
                                  const TrainerConfig& config);

/// ppo_loss + sil_coef * sil_loss.
[[nodiscard]] LossResult combined_loss(const PolicyNetworks& nets, std::span<const StepSample> batch,
                                       std::span<const SilEntry> sil_batch, const TrainerConfig& config);

/// Capacity-bounded replay of past transitions, evicting the lowest R - V first.
class SilBuffer {
public:
    explicit SilBuffer(std::size_t capacity = 0) : capacity_(capacity) {}

    void insert(SilEntry entry);
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    [[nodiscard]] const std::vector<SilEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] double min_priority() const;
    /// Uniform sample with replacement.
    [[nodiscard]] std::vector<SilEntry> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::vector<SilEntry> entries_;  // min-heap on priority
};

struct TrainerState {
    PolicyNetworks policy;
    Adam decision_opt;
    Adam action_opt;
    Adam value_opt;
    SilBuffer sil;
    std::size_t updates{0};
    FeatureScaling scaling;
    Ablation ablation{Ablation::None};

    [[nodiscard]] static TrainerState create(std::size_t num_features, std::size_t num_actions,
                                             const TrainerConfig& config, const FeatureScaling& scaling, Rng& rng);
};

struct UpdateStats {
    double surrogate{0.0};
    double value_loss{0.0};
    double entropy{0.0};
    double sil{0.0};
};

/// PPO epochs over `batch` (advantages and returns already filled), each
/// minibatch combined with a self-imitation batch drawn from the buffer.
UpdateStats ppo_update(TrainerState& state, std::vector<StepSample> batch, const TrainerConfig& config, Rng& rng);

/// Fills advantages and returns for one complete episode and pushes its
/// transitions into the self-imitation buffer.
void finish_episode(TrainerState& state, std::vector<StepSample>& episode, const TrainerConfig& config);

struct TrainingLogRow {
    std::size_t episode{0};
    std::size_t update{0};
    double pnl{0.0};
    double total_reward{0.0};
    double mean_abs_inventory{0.0};
    std::size_t fills{0};
    std::size_t interventions{0};
    double surrogate{0.0};
    double value_loss{0.0};
    double entropy{0.0};
    double sil{0.0};
    std::size_t sil_size{0};
    /// Annualized Sharpe of the PnLs so far (NaN when undefined).
    double sharpe_to_date{0.0};
};

void write_training_log_csv(std::ostream& os, const std::vector<TrainingLogRow>& rows);

/// Serialized policy plus everything needed to act with it.
[[nodiscard]] nlohmann::json checkpoint_json(const TrainerState& state, const EpisodeConfig& env_config);

struct LoadedPolicy {
    PolicyNetworks policy;
    FeatureScaling scaling;
    Ablation ablation{Ablation::None};
    ActionSet action_set{ActionSet::Restricted};
};

[[nodiscard]] LoadedPolicy load_checkpoint(const nlohmann::json& j);

/// Decider sampling from a policy with its own rng stream.
[[nodiscard]] Decider policy_decider(const LoadedPolicy& policy, std::uint64_t seed, bool greedy = false);

struct TrainingResult {
    TrainerState state;
    std::vector<TrainingLogRow> log;
};

/// Called after every episode; may write checkpoints.
using TrainingObserver = std::function<void(const TrainerState&, const TrainingLogRow&)>;

/// Episode seeds are derived from `seed` and the episode index, so results do
/// not depend on the number of rollout threads.
[[nodiscard]] TrainingResult train(std::shared_ptr<const KernelParams> kernel, const EpisodeConfig& env_config,
                                   const TrainerConfig& config, std::uint64_t seed,
                                   const TrainingObserver& observer = {});

/// Episode seed used for training episode `index`.
[[nodiscard]] std::uint64_t training_episode_seed(std::uint64_t seed, std::size_t index) noexcept;

} // namespace hawkesmm
