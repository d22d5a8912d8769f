#include "hawkesmm/eval.hpp"

#include "hawkesmm/metrics.hpp"
#include "hawkesmm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hawkesmm {

using nlohmann::json;

namespace {

constexpr std::uint64_t kEvalStream = 0x20000;
constexpr std::uint64_t kAgentStream = 7;
constexpr std::uint64_t kSweepEvalStream = 0xE7A1;

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string optional_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

} // namespace

AgentSpec AgentSpec::parse(const std::string& text) {
    if (text == "prob") return {AgentKind::Prob, {}};
    if (text == "random") return {AgentKind::Random, {}};
    if (text == "hold") return {AgentKind::Hold, {}};
    const std::string prefix = "checkpoint:";
    if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size()) {
        return {AgentKind::Checkpoint, text.substr(prefix.size())};
    }
    throw std::invalid_argument("unknown agent '" + text + "' (expected prob, random, hold or checkpoint:<path>)");
}

std::string AgentSpec::name() const {
    switch (kind) {
    case AgentKind::Prob: return "prob";
    case AgentKind::Random: return "random";
    case AgentKind::Hold: return "hold";
    case AgentKind::Checkpoint: return "checkpoint:" + checkpoint.string();
    }
    return "unknown";
}

Agent::Agent(AgentSpec spec, ProbAgentConfig prob, bool prob_full_action_set)
    : kind_(spec.kind), name_(spec.name()), prob_(prob), prob_full_(prob_full_action_set) {
    prob_.validate();
    if (kind_ == AgentKind::Checkpoint) {
        std::ifstream in(spec.checkpoint);
        if (!in) {
            throw std::invalid_argument("cannot open checkpoint '" + spec.checkpoint.string() + "'");
        }
        json j;
        try {
            in >> j;
        } catch (const json::parse_error& e) {
            throw std::invalid_argument("checkpoint '" + spec.checkpoint.string() + "' is not valid JSON: " + e.what());
        }
        policy_ = load_checkpoint(j);
    }
}

Agent::Agent(LoadedPolicy policy, std::string name)
    : kind_(AgentKind::Checkpoint), name_(std::move(name)), prob_full_(false), policy_(std::move(policy)) {}

ActionSet Agent::action_set(ActionSet configured) const noexcept {
    switch (kind_) {
    case AgentKind::Checkpoint: return policy_->action_set;
    case AgentKind::Prob: return prob_full_ ? ActionSet::Full : configured;
    default: return configured;
    }
}

Decider Agent::decider(std::uint64_t episode_seed, bool greedy) const {
    const std::uint64_t s = derive_seed(episode_seed, kAgentStream);
    switch (kind_) {
    case AgentKind::Prob: {
        const ProbAgentConfig cfg = prob_;
        return [cfg](const Observation& obs, const std::vector<bool>& mask) { return prob_agent_act(obs, cfg, mask); };
    }
    case AgentKind::Random: {
        auto rng = std::make_shared<Rng>(s);
        return [rng](const Observation&, const std::vector<bool>& mask) { return random_agent_act(mask, *rng); };
    }
    case AgentKind::Hold:
        return [](const Observation&, const std::vector<bool>&) { return hold_agent_act(); };
    case AgentKind::Checkpoint:
        return policy_decider(*policy_, s, greedy);
    }
    throw std::logic_error("Agent::decider: unknown kind");
}

PumpDumpResult detect_pump_and_dump(std::span<const std::int64_t> inventory, double threshold) {
    PumpDumpResult r;
    const std::size_t n = inventory.size();
    if (n < 2) return r;
    std::vector<double> abs_y(n);
    for (std::size_t i = 0; i < n; ++i) abs_y[i] = static_cast<double>(std::llabs(inventory[i]));
    std::vector<double> sorted = abs_y;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
    double median = sorted[n / 2];
    if (n % 2 == 0) {
        const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2));
        median = 0.5 * (median + lower);
    }
    const std::size_t half = n / 2;
    const auto peak_it = std::max_element(abs_y.begin(), abs_y.begin() + static_cast<std::ptrdiff_t>(half));
    const std::size_t peak_idx = static_cast<std::size_t>(peak_it - abs_y.begin());
    const double peak = *peak_it;
    r.score = peak / std::max(median, 1.0);
    if (peak == 0.0) return r;

    const double sign = inventory[peak_idx] > 0 ? 1.0 : -1.0;
    const double second_half_flow = static_cast<double>(inventory[n - 1] - inventory[half]);
    const bool reverses = sign * second_half_flow < 0.0;
    const bool unwound = abs_y[n - 1] <= 0.5 * peak;
    r.flagged = r.score >= threshold && reverses && unwound;
    return r;
}

json RunSummary::to_json() const {
    json hist = json::object();
    hist["hold"] = action_histogram[0];
    for (std::size_t i = 0; i < kNumImpulses; ++i) {
        hist[std::string(kImpulseNames[i])] = action_histogram[i + 1];
    }
    return {{"agent", agent},
            {"seed", seed},
            {"config_hash", config_hash},
            {"n_episodes", n_episodes},
            {"mean_pnl", mean_pnl},
            {"std_pnl", std_pnl},
            {"sharpe", sharpe ? json(*sharpe) : json(nullptr)},
            {"mean_abs_inventory", mean_abs_inventory},
            {"mean_reward", mean_reward},
            {"mean_fills", mean_fills},
            {"total_fills", total_fills},
            {"mean_interventions", mean_interventions},
            {"action_histogram", hist},
            {"pump_and_dump_episodes", pump_and_dump_episodes}};
}

RunSummary summarize(const std::vector<EpisodeResult>& episodes, const EpisodeConfig& env_config) {
    RunSummary s;
    s.n_episodes = episodes.size();
    if (episodes.empty()) return s;
    std::vector<double> pnl, inv, reward, fills, interventions;
    for (const auto& e : episodes) {
        pnl.push_back(e.pnl);
        inv.push_back(e.mean_abs_inventory);
        reward.push_back(e.total_reward);
        fills.push_back(static_cast<double>(e.fills));
        interventions.push_back(static_cast<double>(e.interventions));
        s.total_fills += e.fills;
        s.action_histogram[0] += e.rewards.size() - e.interventions;
        for (std::size_t i = 0; i < kNumImpulses; ++i) s.action_histogram[i + 1] += e.action_counts[i];
        if (detect_pump_and_dump(e.inventory_path).flagged) ++s.pump_and_dump_episodes;
    }
    s.mean_pnl = stats::mean(pnl);
    s.std_pnl = pnl.size() > 1 ? stats::stddev(pnl) : 0.0;
    s.sharpe = annualized_sharpe(pnl, env_config.initial_cash, env_config.horizon);
    s.mean_abs_inventory = stats::mean(inv);
    s.mean_reward = stats::mean(reward);
    s.mean_fills = stats::mean(fills);
    s.mean_interventions = stats::mean(interventions);
    return s;
}

std::uint64_t eval_episode_seed(std::uint64_t seed, std::size_t index) noexcept {
    return derive_seed(seed, kEvalStream + index);
}

EvalResult evaluate_agent(std::shared_ptr<const KernelParams> kernel, EpisodeConfig env_config, const Agent& agent,
                          const EvalConfig& eval, std::uint64_t seed) {
    env_config.action_set = agent.action_set(env_config.action_set);
    MarketMakingEnv env(std::move(kernel), env_config);
    EvalResult out;
    out.episodes.reserve(eval.episodes);
    for (std::size_t e = 0; e < eval.episodes; ++e) {
        const std::uint64_t s = eval_episode_seed(seed, e);
        out.episodes.push_back(run_episode(env, s, agent.decider(s, eval.greedy), e < eval.trace_episodes));
    }
    out.summary = summarize(out.episodes, env_config);
    out.summary.agent = agent.name();
    out.summary.seed = seed;
    return out;
}

void write_episodes_csv(std::ostream& os, const std::vector<EpisodeResult>& episodes) {
    const auto old = os.precision();
    os << std::setprecision(17);
    os << "episode,seed,pnl,total_reward,mean_abs_inventory,terminal_inventory,fills,interventions,pump_and_dump\n";
    for (std::size_t i = 0; i < episodes.size(); ++i) {
        const auto& e = episodes[i];
        os << i << ',' << e.seed << ',' << e.pnl << ',' << e.total_reward << ',' << e.mean_abs_inventory << ','
           << e.terminal_inventory << ',' << e.fills << ',' << e.interventions << ','
           << (detect_pump_and_dump(e.inventory_path).flagged ? 1 : 0) << '\n';
    }
    os.precision(old);
}

std::vector<SweepCell> sweep_cells(const RunConfig& config) {
    const SweepGrid& g = config.sweep;
    std::vector<SweepCell> cells;
    if (g.empty()) return cells;
    auto or_base = [](const auto& axis, auto base) {
        using T = decltype(base);
        return axis.empty() ? std::vector<T>{base} : std::vector<T>(axis.begin(), axis.end());
    };
    const auto etas = or_base(g.eta, config.episode.eta);
    const auto fees = or_base(g.fee_bps, config.episode.fee_bps);
    const auto kernels = or_base(g.kernel, config.kernel_name);
    const auto sils = or_base(g.sil, config.trainer.sil_coef > 0.0);
    const auto ablations = or_base(g.ablation, std::string(ablation_name(config.trainer.ablation)));
    for (const auto& k : kernels)
        for (double eta : etas)
            for (double fee : fees)
                for (bool sil : sils)
                    for (const auto& a : ablations) cells.push_back({cells.size(), eta, fee, k, sil, a});
    return cells;
}

std::vector<SweepRow> run_sweep(const RunConfig& config, std::uint64_t seed,
                                const std::optional<LoadedPolicy>& checkpoint) {
    std::vector<SweepRow> rows;
    const std::uint64_t eval_seed = derive_seed(seed, kSweepEvalStream);
    for (const SweepCell& cell : sweep_cells(config)) {
        SweepRow row;
        row.cell = cell;
        try {
            auto kernel = std::make_shared<const KernelParams>(
                cell.kernel == config.kernel_name ? config.kernel : kernel_by_name(cell.kernel, config.sweep));
            EpisodeConfig env = config.episode;
            env.eta = cell.eta;
            env.fee_bps = cell.fee_bps;
            const Ablation ablation = parse_ablation(cell.ablation);

            std::optional<Agent> agent;
            if (checkpoint) {
                if (checkpoint->ablation != ablation) {
                    throw std::invalid_argument("checkpoint ablation '" + std::string(ablation_name(checkpoint->ablation)) +
                                                "' does not match the cell");
                }
                agent.emplace(*checkpoint);
            } else {
                TrainerConfig tc = config.trainer;
                tc.ablation = ablation;
                if (!cell.sil) tc.sil_coef = 0.0;
                TrainingResult trained = train(kernel, env, tc, derive_seed(seed, cell.index));
                agent.emplace(LoadedPolicy{trained.state.policy, trained.state.scaling, trained.state.ablation,
                                           env.action_set});
            }
            EvalConfig ec = config.eval;
            ec.trace_episodes = 0;
            const EvalResult r = evaluate_agent(kernel, env, *agent, ec, eval_seed);
            row.ok = true;
            row.episodes = r.summary.n_episodes;
            row.mean_pnl = r.summary.mean_pnl;
            row.std_pnl = r.summary.std_pnl;
            row.sharpe = r.summary.sharpe;
            row.mean_abs_inventory = r.summary.mean_abs_inventory;
            row.pump_and_dump_fraction =
                row.episodes > 0 ? static_cast<double>(r.summary.pump_and_dump_episodes) / static_cast<double>(row.episodes)
                                 : 0.0;
            row.degenerate = row.pump_and_dump_fraction > 0.5;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "cell,kernel,eta,fee_bps,sil,ablation,status,episodes,mean_pnl,std_pnl,sharpe,mean_abs_inventory,"
          "pump_and_dump_fraction,degenerate,error\n";
    for (const auto& r : rows) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        os << r.cell.index << ',' << r.cell.kernel << ',' << format_double(r.cell.eta) << ','
           << format_double(r.cell.fee_bps) << ',' << (r.cell.sil ? 1 : 0) << ',' << r.cell.ablation << ','
           << (r.ok ? "ok" : "failed") << ',' << r.episodes << ',' << format_double(r.mean_pnl) << ','
           << format_double(r.std_pnl) << ',' << optional_double(r.sharpe) << ','
           << format_double(r.mean_abs_inventory) << ',' << format_double(r.pump_and_dump_fraction) << ','
           << (r.degenerate ? 1 : 0) << ',' << err << '\n';
    }
}

std::vector<LobEventRow> simulate_lob(const KernelParams& kernel, const EpisodeConfig& env_config,
                                      std::uint64_t seed) {
    kernel.validate();
    if (kernel.dim() != kNumEventTypes) {
        throw std::invalid_argument("simulate_lob: kernel must have 12 event types");
    }
    env_config.validate();
    // Same streams as the environment, so the market matches a hold-agent episode.
    Rng init_rng(derive_seed(seed, 1));
    Rng hawkes_rng(derive_seed(seed, 2));
    Rng book_rng(derive_seed(seed, 3));
    BookState book = sample_initial_book(env_config.initial_state, env_config.replenish, init_rng);
    const AgentBookState agent{};
    HawkesClock clock(kernel, env_config.history_window);
    std::vector<LobEventRow> rows;
    rows.push_back({0.0, kNumEventTypes, book});
    while (auto ev = clock.sample_next_event(hawkes_rng, env_config.horizon)) {
        clock.apply_event(ev->type, ev->time);
        book = apply_event(book, agent, event_from_index(ev->type), book_rng, env_config.replenish).book;
        rows.push_back({ev->time, ev->type, book});
    }
    return rows;
}

void write_lob_csv(std::ostream& os, const std::vector<LobEventRow>& rows) {
    const auto old = os.precision();
    os << std::setprecision(17);
    os << "t,event,p_ask,p_bid,q_ask,q_bid,q_ask_deep,q_bid_deep\n";
    for (const auto& r : rows) {
        os << r.time << ',' << (r.type < kNumEventTypes ? std::string(kEventTypeNames[r.type]) : std::string("initial"))
           << ',' << r.book.p_ask() << ',' << r.book.p_bid() << ',' << r.book.q_ask << ',' << r.book.q_bid << ','
           << r.book.q_ask_deep << ',' << r.book.q_bid_deep << '\n';
    }
    os.precision(old);
}

} // namespace hawkesmm
