#include "hawkesmm/episode.hpp"

#include <cstdlib>

namespace hawkesmm {

EpisodeResult run_episode(MarketMakingEnv& env, std::uint64_t seed, const Decider& decide, bool record_trace) {
    EpisodeResult r;
    r.seed = seed;
    Observation obs = env.reset(seed);
    const double initial_wealth = mark_to_market(env.book(), env.agent());
    const std::size_t steps = env.config().num_steps();
    r.rewards.reserve(steps);
    r.inventory_path.reserve(steps);
    double abs_sum = 0.0;
    while (!env.done()) {
        const Action action = decide(obs, env.admissible_mask());
        StepResult step = env.step(action);
        if (action.impulse) {
            ++r.interventions;
            ++r.action_counts[index_of(*action.impulse)];
        }
        r.fills += step.fills.size();
        r.rewards.push_back(step.reward.total());
        r.total_reward += step.reward.total();
        r.inventory_path.push_back(step.held_inventory);
        abs_sum += static_cast<double>(std::llabs(step.held_inventory));
        if (record_trace) {
            const AgentBookState& a = env.agent();
            const BookState& b = env.book();
            r.trace.push_back(TraceRow{env.time(), a.cash, a.inventory, b.p_ask(), b.p_bid(), action.impulse,
                                       step.reward});
        }
        obs = std::move(step.observation);
    }
    r.mean_abs_inventory = steps > 0 ? abs_sum / static_cast<double>(steps) : 0.0;
    r.terminal_inventory = env.agent().inventory;
    r.pnl = mark_to_market(env.book(), env.agent()) - env.terminal_fee() - initial_wealth;
    return r;
}

} // namespace hawkesmm
