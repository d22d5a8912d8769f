#pragma once

#include "hawkesmm/hawkes.hpp"
#include "hawkesmm/intervention.hpp"
#include "hawkesmm/lob.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace hawkesmm {

struct EpisodeConfig {
    double horizon{300.0};
    double decision_interval{0.1};
    double eta{10.0};
    double kappa{0.1};
    double fee_bps{1.0};
    double initial_cash{2000.0};
    ActionSet action_set{ActionSet::Restricted};
    std::uint64_t seed{0};
    double history_window{1.0};
    /// Draw Y_0 from the initial-state distribution instead of starting flat.
    bool random_initial_inventory{false};
    InitialStateConfig initial_state{};
    QueueRedrawPolicy replenish{};

    /// Number of decision steps, T / dt.
    [[nodiscard]] std::size_t num_steps() const;
    /// Throws std::invalid_argument on an invalid configuration.
    void validate() const;
};

/// What the agent sees at a decision instant, in physical units.
struct Observation {
    double cash{0.0};
    double inventory{0.0};
    double spread{0.0};
    /// n / q per side, capped at 1, or -1 when not resting.
    double rel_pos_ask{-1.0};
    double rel_pos_bid{-1.0};
    std::vector<double> intensities;
    std::vector<double> history_counts;
    double time_since_last{0.0};
    double time_remaining{0.0};
};

inline constexpr double kNotResting = -1.0;

struct RewardBreakdown {
    double inventory_penalty{0.0};
    double cash_delta{0.0};
    double inventory_value_delta{0.0};
    double terminal_adjustment{0.0};

    [[nodiscard]] double total() const noexcept {
        return inventory_penalty + cash_delta + inventory_value_delta + terminal_adjustment;
    }
};

/// A decision: intervene with an impulse, or continue.
struct Action {
    std::optional<Impulse> impulse;

    [[nodiscard]] static Action hold() noexcept { return {}; }
    [[nodiscard]] static Action act(Impulse p) noexcept { return Action{p}; }
    [[nodiscard]] bool intervene() const noexcept { return impulse.has_value(); }
};

struct StepResult {
    Observation observation;
    RewardBreakdown reward;
    bool done{false};
    /// Agent fills from exogenous market orders during the interval.
    std::vector<Fill> fills;
    /// Number of exogenous events applied during the interval.
    std::size_t events{0};
    /// Inventory held over the interval (after the impulse).
    std::int64_t held_inventory{0};
    double impulse_profit{0.0};
};

/// Episodic impulse-control market-making environment over a Hawkes-driven book.
class MarketMakingEnv {
public:
    MarketMakingEnv(std::shared_ptr<const KernelParams> kernel, EpisodeConfig config);

    /// Starts a new episode using `seed` (or the config seed).
    Observation reset(std::optional<std::uint64_t> seed = std::nullopt);

    /// Applies the action at the current grid instant, then simulates the
    /// market until the next grid instant. Throws ContractViolation after the
    /// episode is done and InadmissibleImpulse for inadmissible or
    /// out-of-set impulses.
    StepResult step(const Action& action);

    /// Admissibility per impulse index of the configured action set.
    [[nodiscard]] std::vector<bool> admissible_mask() const;

    [[nodiscard]] Observation observe() const;
    [[nodiscard]] const BookState& book() const noexcept { return book_; }
    [[nodiscard]] const AgentBookState& agent() const noexcept { return agent_; }
    [[nodiscard]] const HawkesClock& clock() const;
    [[nodiscard]] const EpisodeConfig& config() const noexcept { return config_; }
    [[nodiscard]] const KernelParams& kernel() const noexcept { return *kernel_; }
    [[nodiscard]] double time() const noexcept;
    [[nodiscard]] std::size_t step_index() const noexcept { return step_; }
    [[nodiscard]] bool done() const noexcept { return step_ >= num_steps_; }

    /// Terminal fee charged on |Y_T| at the mid (0 before the episode ends).
    [[nodiscard]] double terminal_fee() const noexcept { return terminal_fee_; }

private:
    std::shared_ptr<const KernelParams> kernel_;
    EpisodeConfig config_;
    std::size_t num_steps_;
    std::size_t step_{0};
    BookState book_{};
    AgentBookState agent_{};
    std::optional<HawkesClock> clock_;
    Rng hawkes_rng_;
    Rng book_rng_;
    double terminal_fee_{0.0};
};

/// One row of an exported episode trace.
struct TraceRow {
    double time{0.0};
    double cash{0.0};
    std::int64_t inventory{0};
    double p_ask{0.0};
    double p_bid{0.0};
    std::optional<Impulse> action;
    RewardBreakdown reward;
};

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows);

} // namespace hawkesmm
