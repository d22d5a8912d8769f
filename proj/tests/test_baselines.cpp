#include "hawkesmm/baselines.hpp"
#include "hawkesmm/config.hpp"
#include "hawkesmm/episode.hpp"

#include <doctest.h>

#include <cmath>

using namespace hawkesmm;

namespace {

Observation flat_observation() {
    Observation obs;
    obs.cash = 2000.0;
    obs.spread = 0.01;
    obs.intensities.assign(12, 1.0);
    obs.history_counts.assign(12, 0.0);
    obs.time_remaining = 100.0;
    return obs;
}

std::vector<bool> full_mask() { return std::vector<bool>(kNumImpulses, true); }

std::size_t idx(EventType e) { return static_cast<std::size_t>(e); }

} // namespace

TEST_CASE("prob agent: dominant MO_bid with nothing resting quotes the bid") {
    Observation obs = flat_observation();
    obs.intensities[idx(EventType::MO_bid)] = 5.0;
    const Action a = prob_agent_act(obs, ProbAgentConfig{}, full_mask());
    REQUIRE(a.intervene());
    CHECK(*a.impulse == Impulse::LO_T_bid);
}

TEST_CASE("prob agent: dominant MO_bid with the bid resting cancels a resting ask") {
    Observation obs = flat_observation();
    obs.intensities[idx(EventType::MO_bid)] = 5.0;
    obs.rel_pos_bid = 0.5;
    obs.rel_pos_ask = 0.0;
    CHECK(*prob_agent_act(obs, ProbAgentConfig{}, full_mask()).impulse == Impulse::CO_T_ask);
    obs.rel_pos_ask = kNotResting;
    CHECK_FALSE(prob_agent_act(obs, ProbAgentConfig{}, full_mask()).intervene());
}

TEST_CASE("prob agent: dominant MO_ask mirrors to the ask side") {
    Observation obs = flat_observation();
    obs.intensities[idx(EventType::MO_ask)] = 5.0;
    CHECK(*prob_agent_act(obs, ProbAgentConfig{}, full_mask()).impulse == Impulse::LO_T_ask);
    obs.rel_pos_ask = 0.2;
    obs.rel_pos_bid = 0.3;
    CHECK(*prob_agent_act(obs, ProbAgentConfig{}, full_mask()).impulse == Impulse::CO_T_bid);
}

TEST_CASE("prob agent: inventory beyond the threshold triggers the corrective market order") {
    Observation obs = flat_observation();
    obs.inventory = 6.0;
    CHECK(*prob_agent_act(obs, ProbAgentConfig{}, full_mask()).impulse == Impulse::MO_bid);
    obs.inventory = -6.0;
    CHECK(*prob_agent_act(obs, ProbAgentConfig{}, full_mask()).impulse == Impulse::MO_ask);
    obs.inventory = 5.0;
    CHECK_FALSE(prob_agent_act(obs, ProbAgentConfig{}, full_mask()).intervene());

    // Masked corrective order falls through to the next rule.
    obs.inventory = 6.0;
    obs.intensities[idx(EventType::MO_bid)] = 5.0;
    std::vector<bool> mask = full_mask();
    mask[index_of(Impulse::MO_bid)] = false;
    CHECK(*prob_agent_act(obs, ProbAgentConfig{}, mask).impulse == Impulse::LO_T_bid);
}

TEST_CASE("prob agent: no signal holds; one-sided resting quotes the missing side") {
    Observation obs = flat_observation();
    CHECK_FALSE(prob_agent_act(obs, ProbAgentConfig{}, full_mask()).intervene());
    obs.rel_pos_ask = 0.4;
    CHECK(*prob_agent_act(obs, ProbAgentConfig{}, full_mask()).impulse == Impulse::LO_T_bid);
    ProbAgentConfig off;
    off.skew_threshold = 0.0;
    CHECK_FALSE(prob_agent_act(obs, off, full_mask()).intervene());
}

TEST_CASE("property: the inventory rule dominates whenever the corrective order is admissible") {
    Rng rng(3);
    const ProbAgentConfig cfg;
    for (int i = 0; i < 5000; ++i) {
        Observation obs = flat_observation();
        for (double& l : obs.intensities) l = 0.1 + 5.0 * uniform01(rng);
        obs.rel_pos_ask = bernoulli(rng, 0.5) ? uniform01(rng) : kNotResting;
        obs.rel_pos_bid = bernoulli(rng, 0.5) ? uniform01(rng) : kNotResting;
        const double mag = 6.0 + std::floor(10.0 * uniform01(rng));
        obs.inventory = bernoulli(rng, 0.5) ? mag : -mag;
        const Action a = prob_agent_act(obs, cfg, full_mask());
        REQUIRE(a.intervene());
        CHECK(*a.impulse == (obs.inventory > 0 ? Impulse::MO_bid : Impulse::MO_ask));
        // Pure function: same inputs, same action.
        CHECK(*prob_agent_act(obs, cfg, full_mask()).impulse == *a.impulse);
    }
}

TEST_CASE("prob agent config validation") {
    ProbAgentConfig c;
    c.inventory_threshold = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("random agent: empty mask holds") {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) CHECK_FALSE(random_agent_act(std::vector<bool>(4, false), rng).intervene());
}

TEST_CASE("random agent: two admissible actions are each chosen a quarter of the time") {
    Rng rng(2);
    const std::vector<bool> mask{false, true, false, true};
    int a1 = 0, a3 = 0, hold = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const Action a = random_agent_act(mask, rng);
        if (!a.intervene()) {
            ++hold;
        } else if (*a.impulse == Impulse::LO_T_bid) {
            ++a1;
        } else {
            CHECK(*a.impulse == Impulse::CO_T_bid);
            ++a3;
        }
    }
    const double sd = std::sqrt(n * 0.25 * 0.75);
    CHECK(std::abs(a1 - 0.25 * n) < 4 * sd);
    CHECK(std::abs(a3 - 0.25 * n) < 4 * sd);
    CHECK(std::abs(hold - 0.5 * n) < 4 * std::sqrt(n * 0.25));
}

TEST_CASE("hold agent never intervenes") {
    CHECK_FALSE(hold_agent_act().intervene());
}

TEST_CASE("prob agent episodes are reproducible") {
    auto kernel = std::make_shared<const KernelParams>(default_exponential_kernel());
    EpisodeConfig cfg;
    cfg.horizon = 30.0;
    cfg.action_set = ActionSet::Full;
    std::vector<std::size_t> first;
    for (int run = 0; run < 10; ++run) {
        MarketMakingEnv env(kernel, cfg);
        std::vector<std::size_t> actions;
        auto decide = [&](const Observation& obs, const std::vector<bool>& mask) {
            const Action a = prob_agent_act(obs, ProbAgentConfig{}, mask);
            actions.push_back(a.impulse ? index_of(*a.impulse) + 1 : 0);
            return a;
        };
        (void)run_episode(env, 1234, decide);
        if (run == 0) {
            first = actions;
            CHECK(std::count_if(first.begin(), first.end(), [](std::size_t a) { return a != 0; }) > 0);
        } else {
            CHECK(actions == first);
        }
    }
}

TEST_CASE("scenario: bid-side market-order pressure makes the prob agent quote the bid") {
    std::vector<double> mu = default_baselines();
    mu[idx(EventType::MO_bid)] = 20.0;
    auto kernel = std::make_shared<const KernelParams>(
        make_exponential_kernel(mu, std::vector<double>(144, 0.0), std::vector<double>(144, 4.0)));
    EpisodeConfig cfg;
    cfg.horizon = 10.0;
    cfg.action_set = ActionSet::Full;
    MarketMakingEnv env(kernel, cfg);
    Observation obs = env.reset(5);
    const Action first = prob_agent_act(obs, ProbAgentConfig{}, env.admissible_mask());
    REQUIRE(first.intervene());
    CHECK(*first.impulse == Impulse::LO_T_bid);
    // Over the episode the agent never places liquidity on the ask side.
    while (!env.done()) {
        const Action a = prob_agent_act(obs, ProbAgentConfig{}, env.admissible_mask());
        if (a.impulse) CHECK(*a.impulse != Impulse::LO_T_ask);
        obs = env.step(a).observation;
    }
}
