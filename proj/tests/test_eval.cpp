#include "hawkesmm/config.hpp"
#include "hawkesmm/eval.hpp"
#include "hawkesmm/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace hawkesmm;

namespace {

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

LoadedPolicy untrained_policy(const EpisodeConfig& env) {
    Rng rng(17);
    TrainerConfig tc;
    tc.hidden = {8};
    const FeatureScaling sc = feature_scaling_for(env, default_exponential_kernel());
    const TrainerState st = TrainerState::create(kNumFeatures, action_count(ActionSet::Restricted), tc, sc, rng);
    return LoadedPolicy{st.policy, st.scaling, st.ablation, ActionSet::Restricted};
}

RunConfig small_config() {
    RunConfig c;
    c.episode.horizon = 5.0;
    c.eval.episodes = 3;
    c.sweep = SweepGrid{};
    return c;
}

} // namespace

TEST_CASE("sharpe: worked example") {
    const std::vector<double> pnl{0.01 * 2000.0, 0.02 * 2000.0, 0.03 * 2000.0};
    const auto s = annualized_sharpe(pnl, 2000.0, 300.0);
    REQUIRE(s.has_value());
    CHECK(periods_per_year(300.0) == doctest::Approx(19656.0));
    CHECK(*s == doctest::Approx(2.0 * std::sqrt(19656.0)).epsilon(1e-12));
    CHECK(*s == doctest::Approx(280.4).epsilon(1e-3));
}

TEST_CASE("sharpe: undefined for constant or single PnL") {
    const std::vector<double> flat{5.0, 5.0, 5.0};
    CHECK_FALSE(annualized_sharpe(flat, 2000.0, 300.0).has_value());
    const std::vector<double> one{1.0};
    CHECK_FALSE(annualized_sharpe(one, 2000.0, 300.0).has_value());
}

TEST_CASE("hold agent with random inventory and no fee has zero expected PnL") {
    EpisodeConfig env;
    env.horizon = 5.0;
    env.fee_bps = 0.0;
    env.random_initial_inventory = true;
    EvalConfig ec;
    ec.episodes = 1000;
    ec.trace_episodes = 0;
    const Agent hold(AgentSpec::parse("hold"), ProbAgentConfig{});
    const EvalResult r =
        evaluate_agent(std::make_shared<const KernelParams>(default_exponential_kernel()), env, hold, ec, 42);
    REQUIRE(r.summary.sharpe.has_value());
    const double t = *r.summary.sharpe / std::sqrt(periods_per_year(env.horizon)) * std::sqrt(1000.0);
    CHECK(std::abs(t) < 3.0);
    CHECK(r.summary.action_histogram[0] == 1000 * env.num_steps());
    CHECK(r.summary.mean_interventions == 0.0);
}

TEST_CASE("pump and dump detector") {
    SUBCASE("hold agent flat inventory is not flagged") {
        const std::vector<std::int64_t> flat(100, 0);
        CHECK_FALSE(detect_pump_and_dump(flat).flagged);
        const std::vector<std::int64_t> held(100, 3);
        CHECK_FALSE(detect_pump_and_dump(held).flagged);
    }
    SUBCASE("spike then unwind is flagged") {
        // Builds to 20 early, then sits at 2 and flattens at the end.
        std::vector<std::int64_t> y(100, 0);
        for (std::size_t i = 10; i < 15; ++i) y[i] = static_cast<std::int64_t>(4 * (i - 9));
        for (std::size_t i = 15; i < 99; ++i) y[i] = 2;
        const PumpDumpResult r = detect_pump_and_dump(y);
        CHECK(r.flagged);
        CHECK(r.score >= 5.0);
    }
    SUBCASE("a short position unwound from below is flagged too") {
        std::vector<std::int64_t> y(40, 0);
        y[5] = -8;
        y[6] = -10;
        for (std::size_t i = 20; i < 39; ++i) y[i] = -1;
        CHECK(detect_pump_and_dump(y).flagged);
    }
    SUBCASE("small symmetric oscillation is not flagged") {
        std::vector<std::int64_t> y(100);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = (i % 4 < 2) ? 1 : -1;
        CHECK_FALSE(detect_pump_and_dump(y).flagged);
    }
    SUBCASE("a peak that is held to the end is not flagged") {
        std::vector<std::int64_t> y(100, 0);
        for (std::size_t i = 10; i < 100; ++i) y[i] = 20;
        y[10] = 20;
        CHECK_FALSE(detect_pump_and_dump(y).flagged);
    }
}

TEST_CASE("sweep: empty grid writes only the header") {
    const RunConfig c = small_config();
    CHECK(sweep_cells(c).empty());
    const auto rows = run_sweep(c, 1, untrained_policy(c.episode));
    CHECK(rows.empty());
    std::ostringstream os;
    write_sweep_csv(os, rows);
    CHECK(count_lines(os.str()) == 1);
}

TEST_CASE("sweep: fee axis gives one row per value") {
    RunConfig c = small_config();
    c.sweep.fee_bps = {1.0, 8.0};
    const auto cells = sweep_cells(c);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].eta == c.episode.eta);
    CHECK(cells[0].kernel == c.kernel_name);
    const auto rows = run_sweep(c, 3, untrained_policy(c.episode));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].cell.fee_bps == 1.0);
    CHECK(rows[1].cell.fee_bps == 8.0);
    for (const auto& r : rows) {
        CHECK(r.ok);
        CHECK(r.episodes == 3);
    }
    std::ostringstream os;
    write_sweep_csv(os, rows);
    CHECK(count_lines(os.str()) == 3);
}

TEST_CASE("sweep: cartesian product size") {
    RunConfig c = small_config();
    c.sweep.fee_bps = {1.0, 2.0, 4.0};
    c.sweep.eta = {0.1, 1.0};
    c.sweep.sil = {true, false};
    const auto cells = sweep_cells(c);
    CHECK(cells.size() == 12);
    for (std::size_t i = 0; i < cells.size(); ++i) CHECK(cells[i].index == i);
}

TEST_CASE("sweep: a failing cell is reported and the sweep continues") {
    RunConfig c = small_config();
    c.sweep.ablation = {"intensity", "none"};
    const auto rows = run_sweep(c, 5, untrained_policy(c.episode));
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0].ok);
    CHECK_FALSE(rows[0].error.empty());
    CHECK(rows[1].ok);
    std::ostringstream os;
    write_sweep_csv(os, rows);
    CHECK(os.str().find("failed") != std::string::npos);
    CHECK(count_lines(os.str()) == 3);
}

TEST_CASE("summary is reproducible for a fixed seed") {
    EpisodeConfig env;
    env.horizon = 10.0;
    EvalConfig ec;
    ec.episodes = 5;
    auto kernel = std::make_shared<const KernelParams>(default_exponential_kernel());
    for (const char* name : {"prob", "random"}) {
        const Agent a(AgentSpec::parse(name), ProbAgentConfig{});
        const std::string s1 = evaluate_agent(kernel, env, a, ec, 42).summary.to_json().dump();
        const std::string s2 = evaluate_agent(kernel, env, a, ec, 42).summary.to_json().dump();
        CHECK(s1 == s2);
        const std::string s3 = evaluate_agent(kernel, env, a, ec, 43).summary.to_json().dump();
        CHECK(s1 != s3);
    }
}

TEST_CASE("summary JSON fields") {
    EpisodeConfig env;
    env.horizon = 2.0;
    EvalConfig ec;
    ec.episodes = 1;
    const Agent hold(AgentSpec::parse("hold"), ProbAgentConfig{});
    const auto j = evaluate_agent(std::make_shared<const KernelParams>(default_exponential_kernel()), env, hold, ec, 1)
                       .summary.to_json();
    CHECK(j["agent"] == "hold");
    CHECK(j["sharpe"].is_null());
    CHECK(j["action_histogram"]["hold"] == 20);
    CHECK(j["action_histogram"].size() == kNumImpulses + 1);
}

TEST_CASE("agent spec parsing") {
    CHECK(AgentSpec::parse("prob").kind == AgentKind::Prob);
    CHECK(AgentSpec::parse("random").kind == AgentKind::Random);
    CHECK(AgentSpec::parse("hold").kind == AgentKind::Hold);
    const AgentSpec cp = AgentSpec::parse("checkpoint:/tmp/x.json");
    CHECK(cp.kind == AgentKind::Checkpoint);
    CHECK(cp.checkpoint == "/tmp/x.json");
    CHECK_THROWS_AS((void)AgentSpec::parse("greedy"), std::invalid_argument);
    CHECK_THROWS_AS((void)AgentSpec::parse("checkpoint:"), std::invalid_argument);
    CHECK_THROWS((void)Agent(AgentSpec::parse("checkpoint:/nonexistent/cp.json"), ProbAgentConfig{}));
}

TEST_CASE("agent action sets") {
    const Agent prob(AgentSpec::parse("prob"), ProbAgentConfig{});
    CHECK(prob.action_set(ActionSet::Restricted) == ActionSet::Full);
    const Agent prob_r(AgentSpec::parse("prob"), ProbAgentConfig{}, false);
    CHECK(prob_r.action_set(ActionSet::Restricted) == ActionSet::Restricted);
    const Agent rnd(AgentSpec::parse("random"), ProbAgentConfig{});
    CHECK(rnd.action_set(ActionSet::Restricted) == ActionSet::Restricted);
    const Agent cp(untrained_policy(EpisodeConfig{}));
    CHECK(cp.action_set(ActionSet::Full) == ActionSet::Restricted);
}

TEST_CASE("shipped config files equal the preset builders") {
    for (const char* name : {"default", "poisson", "power_law"}) {
        const std::string path = std::string(HAWKESMM_CONFIG_DIR) + "/" + name + ".json";
        CAPTURE(path);
        CHECK(RunConfig::load(path).to_json() == preset_config(name).to_json());
    }
    CHECK_THROWS_AS((void)preset_config("bogus"), std::invalid_argument);
}

TEST_CASE("run config round trip and unknown keys") {
    const RunConfig c = preset_config("poisson");
    CHECK(RunConfig::from_json(nlohmann::json::parse(c.to_json().dump())).to_json() == c.to_json());
    nlohmann::json j = c.to_json();
    j["episode"]["not_a_key"] = 1;
    CHECK_THROWS_AS((void)RunConfig::from_json(j), std::invalid_argument);
    CHECK(config_hash(c.to_json()) == config_hash(nlohmann::json::parse(c.to_json().dump())));
    CHECK(hex64(config_hash(c.to_json())).size() == 16);
    CHECK(config_hash(c.to_json()) != config_hash(preset_config("default").to_json()));
}

TEST_CASE("market-only simulation matches a hold-agent episode") {
    EpisodeConfig env;
    env.horizon = 20.0;
    const KernelParams k = default_exponential_kernel();
    const auto rows = simulate_lob(k, env, 99);
    REQUIRE(rows.size() > 1);
    CHECK(rows.front().type == kNumEventTypes);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].time >= rows[i - 1].time);
    MarketMakingEnv m(std::make_shared<const KernelParams>(k), env);
    const EpisodeResult r =
        run_episode(m, 99, [](const Observation&, const std::vector<bool>&) { return Action::hold(); });
    (void)r;
    CHECK(rows.back().book == m.book());
    std::ostringstream os;
    write_lob_csv(os, rows);
    CHECK(count_lines(os.str()) == rows.size() + 1);
    CHECK(os.str().find(",initial,") != std::string::npos);
}
