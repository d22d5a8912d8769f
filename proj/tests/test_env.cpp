#include "hawkesmm/baselines.hpp"
#include "hawkesmm/config.hpp"
#include "hawkesmm/env.hpp"
#include "hawkesmm/episode.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace hawkesmm;

namespace {

std::shared_ptr<const KernelParams> silent_kernel() {
    return std::make_shared<const KernelParams>(make_exponential_kernel(std::vector<double>(12, 0.0),
                                                                        std::vector<double>(144, 0.0),
                                                                        std::vector<double>(144, 1.0)));
}

std::shared_ptr<const KernelParams> hawkes_kernel() {
    return std::make_shared<const KernelParams>(default_exponential_kernel());
}

// First seed whose sampled initial inventory equals `y`.
std::uint64_t seed_with_inventory(MarketMakingEnv& env, std::int64_t y) {
    for (std::uint64_t s = 0; s < 10000; ++s) {
        env.reset(s);
        if (env.agent().inventory == y) return s;
    }
    FAIL("no seed found");
    return 0;
}

Decider random_decider(std::uint64_t seed) {
    auto rng = std::make_shared<Rng>(seed);
    return [rng](const Observation&, const std::vector<bool>& mask) { return random_agent_act(mask, *rng); };
}

} // namespace

TEST_CASE("reset: fresh state") {
    MarketMakingEnv env(hawkes_kernel(), EpisodeConfig{});
    const Observation obs = env.reset(1);
    CHECK(obs.inventory == 0.0);
    CHECK(obs.cash == 2000.0);
    CHECK(obs.rel_pos_ask == kNotResting);
    CHECK(obs.rel_pos_bid == kNotResting);
    CHECK(obs.intensities == env.kernel().mu);
    CHECK(obs.time_remaining == 300.0);
    CHECK(env.step_index() == 0);
    CHECK_FALSE(env.done());
}

TEST_CASE("reset: fixed seed gives identical initial observations") {
    MarketMakingEnv a(hawkes_kernel(), EpisodeConfig{}), b(hawkes_kernel(), EpisodeConfig{});
    a.reset(77);
    b.reset(77);
    CHECK(a.book() == b.book());
    CHECK(a.agent() == b.agent());
}

TEST_CASE("reset: initial mid-price sample mean") {
    MarketMakingEnv env(hawkes_kernel(), EpisodeConfig{});
    double sum = 0.0;
    const int n = 1000;
    for (int s = 0; s < n; ++s) {
        env.reset(static_cast<std::uint64_t>(s));
        sum += env.book().p_mid();
    }
    // Var(p_mid) = 100 plus the small spread term; 3 standard errors of sqrt(100 / n).
    CHECK(std::abs(sum / n - 200.0) < 3.0 * std::sqrt(100.0 / n) + 0.01);
}

TEST_CASE("step: inventory penalty with no events") {
    EpisodeConfig cfg;
    cfg.random_initial_inventory = true;
    MarketMakingEnv env(silent_kernel(), cfg);
    const std::uint64_t s = seed_with_inventory(env, 2);
    env.reset(s);
    const StepResult r = env.step(Action::hold());
    CHECK(r.events == 0);
    CHECK(r.reward.inventory_penalty == doctest::Approx(-4.0).epsilon(1e-15));
    CHECK(r.reward.cash_delta == 0.0);
    CHECK(r.reward.inventory_value_delta == 0.0);
    CHECK(r.reward.total() == doctest::Approx(-4.0).epsilon(1e-15));
}

TEST_CASE("step: terminal adjustment") {
    EpisodeConfig cfg;
    cfg.horizon = 0.1;
    cfg.eta = 0.0;
    cfg.random_initial_inventory = true;
    cfg.initial_state.mid_variance = 0.0;
    MarketMakingEnv env(silent_kernel(), cfg);
    const std::uint64_t s = seed_with_inventory(env, 3);
    env.reset(s);
    const StepResult r = env.step(Action::hold());
    CHECK(r.done);
    const double mid = env.book().p_mid();
    CHECK(std::abs(mid - 200.0) < 0.02);
    CHECK(r.reward.terminal_adjustment == doctest::Approx(-0.9 - 1e-4 * 3.0 * mid).epsilon(1e-14));
    CHECK(r.reward.terminal_adjustment == doctest::Approx(-0.96).epsilon(1e-5));
    CHECK(env.terminal_fee() == doctest::Approx(0.0003 * mid));
}

TEST_CASE("accounting identity with zero penalties and fees") {
    EpisodeConfig cfg;
    cfg.horizon = 20.0;
    cfg.eta = 0.0;
    cfg.kappa = 0.0;
    cfg.fee_bps = 0.0;
    cfg.action_set = ActionSet::Full;
    MarketMakingEnv env(hawkes_kernel(), cfg);
    for (std::uint64_t e = 0; e < 20; ++e) {
        const EpisodeResult r = run_episode(env, 500 + e, random_decider(e));
        double sum = 0.0;
        for (double x : r.rewards) sum += x;
        CHECK(sum == doctest::Approx(mark_to_market(env.book(), env.agent()) - cfg.initial_cash).epsilon(1e-12));
        CHECK(std::abs(sum - (mark_to_market(env.book(), env.agent()) - cfg.initial_cash)) < 1e-9);
    }
}

TEST_CASE("reward is invariant to grid refinement without impulses when eta = 0") {
    EpisodeConfig fine;
    fine.horizon = 30.0;
    fine.eta = 0.0;
    fine.kappa = 0.0;
    fine.fee_bps = 0.0;
    fine.random_initial_inventory = true;
    EpisodeConfig coarse = fine;
    coarse.decision_interval = 0.5;
    MarketMakingEnv a(hawkes_kernel(), fine), b(hawkes_kernel(), coarse);
    auto hold = [](const Observation&, const std::vector<bool>&) { return Action::hold(); };
    for (std::uint64_t s : {3u, 4u, 5u}) {
        const EpisodeResult ra = run_episode(a, s, hold);
        const EpisodeResult rb = run_episode(b, s, hold);
        CHECK(a.book() == b.book());
        CHECK(ra.total_reward == doctest::Approx(rb.total_reward).epsilon(1e-12));
    }
}

TEST_CASE("restricted action set rejects market and in-spread impulses") {
    MarketMakingEnv env(hawkes_kernel(), EpisodeConfig{});
    env.reset(2);
    CHECK(env.admissible_mask().size() == 4);
    CHECK_THROWS_AS((void)env.step(Action::act(Impulse::MO_bid)), InadmissibleImpulse);
    CHECK_THROWS_AS((void)env.step(Action::act(Impulse::LO_IS_ask)), InadmissibleImpulse);
    CHECK_THROWS_AS((void)env.step(Action::act(Impulse::CO_T_ask)), InadmissibleImpulse);
    CHECK_NOTHROW((void)env.step(Action::act(Impulse::LO_T_ask)));
    CHECK(env.agent().resting(Side::Ask));
}

TEST_CASE("stepping a finished episode is a contract violation") {
    EpisodeConfig cfg;
    cfg.horizon = 0.2;
    MarketMakingEnv env(hawkes_kernel(), cfg);
    CHECK_THROWS_AS((void)env.step(Action::hold()), ContractViolation);
    env.reset(1);
    (void)env.step(Action::hold());
    (void)env.step(Action::hold());
    CHECK(env.done());
    CHECK_THROWS_AS((void)env.step(Action::hold()), ContractViolation);
}

TEST_CASE("config validation") {
    EpisodeConfig c;
    c.decision_interval = 0.07;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = EpisodeConfig{};
    c.eta = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = EpisodeConfig{};
    c.horizon = 0.0;
    CHECK_THROWS_AS(MarketMakingEnv(hawkes_kernel(), c), std::invalid_argument);
    CHECK(EpisodeConfig{}.num_steps() == 3000);
}

TEST_CASE("determinism and observation invariants") {
    EpisodeConfig cfg;
    cfg.horizon = 30.0;
    cfg.action_set = ActionSet::Full;
    MarketMakingEnv a(hawkes_kernel(), cfg), b(hawkes_kernel(), cfg);
    const EpisodeResult ra = run_episode(a, 8, random_decider(1), true);
    const EpisodeResult rb = run_episode(b, 8, random_decider(1), true);
    CHECK(ra.rewards == rb.rewards);
    CHECK(ra.inventory_path == rb.inventory_path);
    CHECK(a.agent() == b.agent());

    MarketMakingEnv env(hawkes_kernel(), cfg);
    Observation obs = env.reset(9);
    auto rng = std::make_shared<Rng>(2);
    while (!env.done()) {
        for (double r : {obs.rel_pos_ask, obs.rel_pos_bid}) CHECK((r == kNotResting || (r >= 0.0 && r <= 1.0)));
        for (std::size_t i = 0; i < 12; ++i) CHECK(obs.intensities[i] >= env.kernel().mu[i]);
        const auto mask = env.admissible_mask();
        obs = env.step(random_agent_act(mask, *rng)).observation;
    }
}

TEST_CASE("trace export") {
    EpisodeConfig cfg;
    cfg.horizon = 1.0;
    MarketMakingEnv env(hawkes_kernel(), cfg);
    const EpisodeResult r = run_episode(env, 4, random_decider(3), true);
    REQUIRE(r.trace.size() == 10);
    std::ostringstream os;
    write_trace_csv(os, r.trace);
    const std::string s = os.str();
    CHECK(s.rfind("t,X,Y,p_ask,p_bid,action,inventory_penalty,cash_delta,inventory_value_delta,terminal_adjustment,reward\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 11);
}
