// Command-line entry point: simulate, train, eval, sweep, dynkin-check.

#include "hawkesmm/config.hpp"
#include "hawkesmm/eval.hpp"
#include "hawkesmm/qvi.hpp"
#include "hawkesmm/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace hawkesmm;

namespace {

struct Global {
    std::string config_path;
    std::string preset{"default"};
    std::uint64_t seed{42};
    std::string out_dir{"."};
};

RunConfig load_config(const Global& g) {
    return g.config_path.empty() ? preset_config(g.preset) : RunConfig::load(g.config_path);
}

std::ofstream open_out(const Global& g, const std::string& name) {
    fs::create_directories(g.out_dir);
    const fs::path p = fs::path(g.out_dir) / name;
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    return os;
}

void write_json(const Global& g, const std::string& name, const nlohmann::json& j) {
    auto os = open_out(g, name);
    os << j.dump(2) << '\n';
}

int run_simulate(const Global& g, std::size_t episodes) {
    const RunConfig c = load_config(g);
    for (std::size_t e = 0; e < episodes; ++e) {
        const std::uint64_t s = eval_episode_seed(g.seed, e);
        auto os = open_out(g, "trace_" + std::to_string(e) + ".csv");
        write_lob_csv(os, simulate_lob(c.kernel, c.episode, s));
    }
    return 0;
}

int run_train(const Global& g, std::optional<std::size_t> episodes, std::size_t checkpoint_every) {
    RunConfig c = load_config(g);
    if (episodes) c.trainer.total_episodes = *episodes;
    auto kernel = std::make_shared<const KernelParams>(c.kernel);
    const EpisodeConfig env = c.episode;
    auto observer = [&](const TrainerState& state, const TrainingLogRow& row) {
        if (checkpoint_every > 0 && (row.episode + 1) % checkpoint_every == 0) {
            write_json(g, "checkpoint_" + std::to_string(row.episode + 1) + ".json", checkpoint_json(state, env));
        }
        std::cerr << "episode " << row.episode + 1 << '/' << c.trainer.total_episodes << " pnl " << row.pnl
                  << " |Y| " << row.mean_abs_inventory << '\n';
    };
    const TrainingResult r = train(kernel, env, c.trainer, g.seed, observer);
    write_json(g, "checkpoint.json", checkpoint_json(r.state, env));
    auto log = open_out(g, "training_log.csv");
    write_training_log_csv(log, r.log);
    write_json(g, "config.json", c.to_json());
    return 0;
}

int run_eval(const Global& g, const std::string& agent_text, std::optional<std::size_t> episodes) {
    RunConfig c = load_config(g);
    if (episodes) c.eval.episodes = *episodes;
    const Agent agent(AgentSpec::parse(agent_text), c.prob_agent, c.eval.prob_agent_full_action_set);
    const EvalResult r =
        evaluate_agent(std::make_shared<const KernelParams>(c.kernel), c.episode, agent, c.eval, g.seed);
    RunSummary summary = r.summary;
    summary.config_hash = hex64(config_hash(c.to_json()));
    write_json(g, "summary.json", summary.to_json());
    auto eps = open_out(g, "episodes.csv");
    write_episodes_csv(eps, r.episodes);
    for (std::size_t e = 0; e < r.episodes.size(); ++e) {
        if (r.episodes[e].trace.empty()) continue;
        auto os = open_out(g, "trace_" + std::to_string(e) + ".csv");
        write_trace_csv(os, r.episodes[e].trace);
    }
    std::cout << summary.to_json().dump(2) << '\n';
    return 0;
}

int run_sweep_cmd(const Global& g, const std::string& checkpoint_path) {
    const RunConfig c = load_config(g);
    std::optional<LoadedPolicy> checkpoint;
    if (!checkpoint_path.empty()) {
        std::ifstream in(checkpoint_path);
        if (!in) throw std::invalid_argument("cannot open checkpoint '" + checkpoint_path + "'");
        checkpoint = load_checkpoint(nlohmann::json::parse(in));
    }
    const auto rows = run_sweep(c, g.seed, checkpoint);
    auto os = open_out(g, "sweep.csv");
    write_sweep_csv(os, rows);
    write_sweep_csv(std::cout, rows);
    return 0;
}

struct DynkinArgs {
    std::string function{"intensity"};
    double mu{1.0};
    double alpha{0.5};
    double gamma{1.0};
    double t_end{2.0};
    std::size_t paths{10000};
};

int run_dynkin(const Global& g, const DynkinArgs& a) {
    DynkinFunction fn;
    if (a.function == "intensity") {
        fn = DynkinFunction::Intensity;
    } else if (a.function == "count") {
        fn = DynkinFunction::Count;
    } else {
        throw std::invalid_argument("--function must be intensity or count");
    }
    const KernelParams k = make_exponential_kernel({a.mu}, {a.alpha}, {a.gamma});
    const DynkinResult r = dynkin_check(fn, 0, k, a.t_end, a.paths, g.seed);
    const nlohmann::json j = {{"function", a.function}, {"estimate", r.estimate}, {"reference", r.reference},
                              {"se", r.se},             {"z", r.z}};
    write_json(g, "dynkin.json", j);
    std::cout << j.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hawkes-driven limit order book market-making simulator"};
    app.require_subcommand(1);
    // Global options are accepted after the subcommand too (`eval --seed 42`).
    app.fallthrough();
    Global g;
    app.add_option("--config", g.config_path, "Run configuration JSON (overrides --preset)");
    app.add_option("--preset", g.preset, "Built-in configuration: default, poisson or power_law");
    app.add_option("--seed", g.seed, "Base seed");
    app.add_option("--out-dir", g.out_dir, "Output directory");

    std::size_t sim_episodes = 1;
    auto* simulate = app.add_subcommand("simulate", "Simulate the market alone and write raw book traces");
    simulate->add_option("--episodes", sim_episodes, "Number of traces");

    std::optional<std::size_t> train_episodes;
    std::size_t checkpoint_every = 0;
    auto* train_cmd = app.add_subcommand("train", "Train a PPO+SIL policy");
    train_cmd->add_option("--episodes", train_episodes, "Override the number of training episodes");
    train_cmd->add_option("--checkpoint-every", checkpoint_every, "Also write checkpoint_<n>.json every n episodes");

    std::string agent = "prob";
    std::optional<std::size_t> eval_episodes;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate an agent");
    eval_cmd->add_option("--agent", agent, "prob | random | hold | checkpoint:<path>");
    eval_cmd->add_option("--episodes", eval_episodes, "Override the number of evaluation episodes");

    std::string sweep_checkpoint;
    auto* sweep_cmd = app.add_subcommand("sweep", "Sensitivity / ablation sweep over the config's grid");
    sweep_cmd->add_option("--checkpoint", sweep_checkpoint, "Evaluate this checkpoint in every cell instead of training");

    DynkinArgs dyn;
    auto* dynkin = app.add_subcommand("dynkin-check", "Monte-Carlo check of the generator on a 1-type Hawkes process");
    dynkin->add_option("--function", dyn.function, "intensity | count");
    dynkin->add_option("--mu", dyn.mu);
    dynkin->add_option("--alpha", dyn.alpha);
    dynkin->add_option("--gamma", dyn.gamma);
    dynkin->add_option("--t-end", dyn.t_end);
    dynkin->add_option("--paths", dyn.paths);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return run_simulate(g, sim_episodes);
        if (*train_cmd) return run_train(g, train_episodes, checkpoint_every);
        if (*eval_cmd) return run_eval(g, agent, eval_episodes);
        if (*sweep_cmd) return run_sweep_cmd(g, sweep_checkpoint);
        if (*dynkin) return run_dynkin(g, dyn);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
