#pragma once

#include "hawkesmm/env.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace hawkesmm {

/// Chooses an action from the current observation and admissibility mask.
using Decider = std::function<Action(const Observation&, const std::vector<bool>&)>;

struct EpisodeResult {
    std::uint64_t seed{0};
    /// Terminal mark-to-market minus the terminal fee minus the initial mark-to-market
    /// (X_T + Y_T p_mid_T - fee - initial cash when starting flat).
    double pnl{0.0};
    double total_reward{0.0};
    /// Time average of |Y| over the decision grid (inventory held per interval).
    double mean_abs_inventory{0.0};
    std::int64_t terminal_inventory{0};
    std::size_t fills{0};
    std::size_t interventions{0};
    std::array<std::size_t, kNumImpulses> action_counts{};
    std::vector<double> rewards;
    std::vector<std::int64_t> inventory_path;
    std::vector<TraceRow> trace;
};

/// Runs one full episode from `env.reset(seed)`.
[[nodiscard]] EpisodeResult run_episode(MarketMakingEnv& env, std::uint64_t seed, const Decider& decide,
                                        bool record_trace = false);

} // namespace hawkesmm
