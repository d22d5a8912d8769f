#pragma once

#include "hawkesmm/env.hpp"

#include <vector>

namespace hawkesmm {

struct ProbAgentConfig {
    /// Corrective market orders fire when |Y| exceeds this.
    std::int64_t inventory_threshold{5};
    /// With no directional signal, the missing side is quoted once the
    /// difference in resting orders between the sides reaches this.
    double skew_threshold{1.0};

    void validate() const;
};

/// Intensity-reading benchmark. Pure function of its inputs.
///
/// Priority: (1) |Y| > threshold: inventory-reducing market order (sell into
/// the bid queue when long, buy from the ask queue when short); (2) the most
/// intense event type is MO_bid: quote the bid if not resting there, else
/// cancel a resting ask; (3) MO_ask: the mirror image; (4) no signal: quote
/// the missing side when resting asymmetry reaches the skew threshold;
/// otherwise hold. Masked choices fall through to the next rule.
[[nodiscard]] Action prob_agent_act(const Observation& obs, const ProbAgentConfig& config,
                                    const std::vector<bool>& mask);

/// Intervenes with probability 1/2, choosing uniformly among admissible impulses.
[[nodiscard]] Action random_agent_act(const std::vector<bool>& mask, Rng& rng);

[[nodiscard]] inline Action hold_agent_act() noexcept { return Action::hold(); }

} // namespace hawkesmm
