#pragma once

#include "hawkesmm/baselines.hpp"
#include "hawkesmm/config.hpp"
#include "hawkesmm/episode.hpp"
#include "hawkesmm/trainer.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hawkesmm {

enum class AgentKind { Prob, Random, Hold, Checkpoint };

struct AgentSpec {
    AgentKind kind{AgentKind::Prob};
    std::filesystem::path checkpoint;

    /// "prob", "random", "hold" or "checkpoint:<path>".
    [[nodiscard]] static AgentSpec parse(const std::string& text);
    [[nodiscard]] std::string name() const;
};

/// A ready-to-run agent; checkpoints are loaded once at construction.
class Agent {
public:
    Agent(AgentSpec spec, ProbAgentConfig prob, bool prob_full_action_set = true);
    Agent(LoadedPolicy policy, std::string name = "checkpoint");

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    /// Action set the agent acts in, given the environment's configured set.
    [[nodiscard]] ActionSet action_set(ActionSet configured) const noexcept;
    /// Decider for one episode; randomized agents draw from a stream derived from `episode_seed`.
    [[nodiscard]] Decider decider(std::uint64_t episode_seed, bool greedy = false) const;

private:
    AgentKind kind_;
    std::string name_;
    ProbAgentConfig prob_;
    bool prob_full_;
    std::optional<LoadedPolicy> policy_;
};

struct PumpDumpResult {
    bool flagged{false};
    /// Peak |Y| in the first half over max(median |Y|, 1).
    double score{0.0};
};

/// Heuristic for the degenerate build-then-unwind strategy: the first-half
/// peak |Y| is at least `threshold` times the trace median (floored at one
/// unit), net flow over the second half opposes the peak's sign, and the
/// terminal position is at most half the peak.
[[nodiscard]] PumpDumpResult detect_pump_and_dump(std::span<const std::int64_t> inventory, double threshold = 5.0);

struct RunSummary {
    std::string agent;
    std::uint64_t seed{0};
    std::string config_hash;
    std::size_t n_episodes{0};
    double mean_pnl{0.0};
    double std_pnl{0.0};
    std::optional<double> sharpe;
    double mean_abs_inventory{0.0};
    double mean_reward{0.0};
    double mean_fills{0.0};
    std::size_t total_fills{0};
    double mean_interventions{0.0};
    /// Decision counts: index 0 is "hold", then one entry per impulse.
    std::array<std::size_t, kNumImpulses + 1> action_histogram{};
    std::size_t pump_and_dump_episodes{0};

    [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] RunSummary summarize(const std::vector<EpisodeResult>& episodes, const EpisodeConfig& env_config);

struct EvalResult {
    RunSummary summary;
    std::vector<EpisodeResult> episodes;
};

/// Seed of evaluation episode `index`.
[[nodiscard]] std::uint64_t eval_episode_seed(std::uint64_t seed, std::size_t index) noexcept;

/// Runs `eval.episodes` episodes; the first `eval.trace_episodes` record traces.
[[nodiscard]] EvalResult evaluate_agent(std::shared_ptr<const KernelParams> kernel, EpisodeConfig env_config,
                                        const Agent& agent, const EvalConfig& eval, std::uint64_t seed);

void write_episodes_csv(std::ostream& os, const std::vector<EpisodeResult>& episodes);

struct SweepCell {
    std::size_t index{0};
    double eta{0.0};
    double fee_bps{0.0};
    std::string kernel;
    bool sil{true};
    std::string ablation;
};

/// Cartesian product of the non-empty grid axes; empty axes take the base
/// config's value. An empty grid has no cells.
[[nodiscard]] std::vector<SweepCell> sweep_cells(const RunConfig& config);

struct SweepRow {
    SweepCell cell;
    bool ok{false};
    std::string error;
    std::size_t episodes{0};
    double mean_pnl{0.0};
    double std_pnl{0.0};
    std::optional<double> sharpe;
    double mean_abs_inventory{0.0};
    double pump_and_dump_fraction{0.0};
    /// More than half of the evaluation episodes flagged as pump and dump.
    bool degenerate{false};
};

/// Trains (or, with `checkpoint`, only evaluates) one policy per cell. Cell
/// training seeds derive from (seed, cell index); all cells share the same
/// out-of-sample evaluation seeds. A cell that throws is reported as failed.
[[nodiscard]] std::vector<SweepRow> run_sweep(const RunConfig& config, std::uint64_t seed,
                                              const std::optional<LoadedPolicy>& checkpoint = std::nullopt);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// One exogenous event of a raw book simulation.
struct LobEventRow {
    double time{0.0};
    std::size_t type{0};
    BookState book;
};

/// Simulates the market alone (no agent) over the episode horizon.
[[nodiscard]] std::vector<LobEventRow> simulate_lob(const KernelParams& kernel, const EpisodeConfig& env_config,
                                                    std::uint64_t seed);

void write_lob_csv(std::ostream& os, const std::vector<LobEventRow>& rows);

} // namespace hawkesmm
