#pragma once

#include "hawkesmm/env.hpp"
#include "hawkesmm/nn.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hawkesmm {

/// Observation block removed (zero-filled) from the network input.
enum class Ablation { None, History, Intensity, Spread, RelativePosition };

[[nodiscard]] const char* ablation_name(Ablation a) noexcept;
[[nodiscard]] Ablation parse_ablation(const std::string& name);

// Feature layout: cash, inventory, spread, rel_pos_ask, rel_pos_bid,
// 12 intensities, 12 history counts, time since last event, time remaining.
inline constexpr std::size_t kNumFeatures = 31;
inline constexpr std::size_t kFeatureSpread = 2;
inline constexpr std::size_t kFeatureRelPos = 3;
inline constexpr std::size_t kFeatureIntensity = 5;
inline constexpr std::size_t kFeatureHistory = 17;
inline constexpr std::size_t kFeatureSinceLast = 29;

/// Fixed affine scales mapping physical observation units to network inputs.
struct FeatureScaling {
    double initial_cash{2000.0};
    double price_scale{200.0};
    double inventory_scale{5.0};
    double tick{0.01};
    double intensity_scale{1.0};
    double count_scale{5.0};
    double history_window{1.0};
    double horizon{300.0};

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] static FeatureScaling from_json(const nlohmann::json& j);
};

[[nodiscard]] FeatureScaling feature_scaling_for(const EpisodeConfig& config, const KernelParams& kernel);

[[nodiscard]] std::vector<double> make_features(const Observation& obs, const FeatureScaling& scaling,
                                                Ablation ablation = Ablation::None);

/// Decision network (one logit), action network (one logit per impulse of
/// the action set) and a separate value network.
struct PolicyNetworks {
    DenseNet decision;
    DenseNet action;
    DenseNet value;

    [[nodiscard]] static PolicyNetworks create(std::size_t num_features, std::size_t num_actions,
                                               const std::vector<std::size_t>& hidden, Activation activation,
                                               Rng& rng);
    [[nodiscard]] std::size_t num_features() const noexcept { return decision.input_size(); }
    [[nodiscard]] std::size_t num_actions() const noexcept { return action.output_size(); }

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] static PolicyNetworks from_json(const nlohmann::json& j);

    friend bool operator==(const PolicyNetworks&, const PolicyNetworks&) = default;
};

struct PolicyOutput {
    double decision_logit{0.0};
    std::vector<double> action_logits;
    double value{0.0};
};

[[nodiscard]] PolicyOutput evaluate(const PolicyNetworks& nets, std::span<const double> features);

/// log(sigmoid(z)), stable for large |z|.
[[nodiscard]] double log_sigmoid(double z) noexcept;
[[nodiscard]] double sigmoid(double z) noexcept;

/// Softmax over admissible entries only; masked entries get probability 0.
/// Returns all zeros when nothing is admissible.
[[nodiscard]] std::vector<double> masked_softmax(std::span<const double> logits, const std::vector<bool>& mask);

[[nodiscard]] bool any_admissible(const std::vector<bool>& mask) noexcept;

/// log p(d) + d * log p(a | d = 1).
[[nodiscard]] double joint_log_prob(const PolicyOutput& out, const std::vector<bool>& mask, bool intervene,
                                    std::size_t action);

/// Decision entropy plus intervention probability times the action entropy.
[[nodiscard]] double policy_entropy(const PolicyOutput& out, const std::vector<bool>& mask);

struct ActResult {
    bool intervene{false};
    std::optional<std::size_t> action;
    double log_prob{0.0};
    double value{0.0};
    double intervene_probability{0.0};
};

/// Samples d ~ Bernoulli(sigmoid(logit)) and, if d = 1, an admissible action
/// from the masked softmax. With no admissible action d is forced to 0.
/// `greedy` takes the mode of each head instead of sampling.
[[nodiscard]] ActResult act(const PolicyNetworks& nets, std::span<const double> features,
                            const std::vector<bool>& mask, Rng& rng, bool greedy = false);

} // namespace hawkesmm
