#include "hawkesmm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hawkesmm {

namespace {

using nlohmann::json;

// Unnormalised branching structure, entry (i, j) = effect of type j on type i.
std::vector<double> branching_structure() {
    const std::size_t m = kNumEventTypes;
    std::vector<double> b(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const EventType ei = event_from_index(i);
            const EventType ej = event_from_index(j);
            const bool same_side = event_side(ei) == event_side(ej);
            double v = 0.0;
            if (i == j) {
                v = 1.0;
            } else if (!same_side && event_action(ei) == event_action(ej)) {
                v = 0.3;
            } else if (same_side && event_action(ej) == EventAction::Market && event_action(ei) == EventAction::LimitTop) {
                // Market orders draw replenishing limit orders to the same side.
                v = 0.5;
            }
            b[i * m + j] = v;
        }
    }
    return b;
}

std::vector<double> scaled_structure(double radius) {
    std::vector<double> b = branching_structure();
    const double rho = spectral_radius(b, kNumEventTypes);
    for (double& v : b) v *= radius / rho;
    return b;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    if (!j.is_object()) {
        throw std::invalid_argument(std::string(where) + ": expected a JSON object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!ok.count(key)) {
            throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
        }
    }
}

std::vector<double> flatten_matrix(const json& j, std::size_t m, const char* name) {
    if (!j.is_array() || j.size() != m) {
        throw std::invalid_argument(std::string("kernel: '") + name + "' must be an array of " + std::to_string(m) +
                                    " rows");
    }
    std::vector<double> out;
    out.reserve(m * m);
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != m) {
            throw std::invalid_argument(std::string("kernel: every row of '") + name + "' must have " +
                                        std::to_string(m) + " entries");
        }
        for (const auto& v : row) out.push_back(v.get<double>());
    }
    return out;
}

json matrix_json(const std::vector<double>& flat, std::size_t m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m; ++i) {
        rows.push_back(std::vector<double>(flat.begin() + static_cast<long>(i * m),
                                           flat.begin() + static_cast<long>((i + 1) * m)));
    }
    return rows;
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

ActionSet parse_action_set(const std::string& s) {
    if (s == "restricted") return ActionSet::Restricted;
    if (s == "full") return ActionSet::Full;
    throw std::invalid_argument("unknown action_set '" + s + "' (expected restricted or full)");
}

const char* action_set_name(ActionSet s) { return s == ActionSet::Restricted ? "restricted" : "full"; }

} // namespace

std::vector<double> default_baselines() {
    std::vector<double> mu(kNumEventTypes, 0.0);
    for (std::size_t i = 0; i < kNumEventTypes; ++i) {
        switch (event_action(event_from_index(i))) {
        case EventAction::LimitDeep: mu[i] = 0.5; break;
        case EventAction::LimitTop: mu[i] = 1.0; break;
        case EventAction::CancelTop: mu[i] = 0.8; break;
        case EventAction::CancelDeep: mu[i] = 0.4; break;
        case EventAction::Market: mu[i] = 0.5; break;
        case EventAction::LimitInSpread: mu[i] = 0.2; break;
        }
    }
    return mu;
}

KernelParams default_exponential_kernel(double radius, double decay) {
    std::vector<double> b = scaled_structure(radius);
    std::vector<double> alpha(b.size());
    for (std::size_t k = 0; k < b.size(); ++k) alpha[k] = b[k] * decay;
    return make_exponential_kernel(default_baselines(), std::move(alpha),
                                   std::vector<double>(b.size(), decay));
}

KernelParams default_poisson_kernel() {
    const std::size_t n = kNumEventTypes * kNumEventTypes;
    return make_exponential_kernel(default_baselines(), std::vector<double>(n, 0.0), std::vector<double>(n, 4.0));
}

KernelParams default_power_law_kernel(double radius, double beta, double delta) {
    std::vector<double> b = scaled_structure(radius);
    // Integral of a (1 + t/delta)^-beta over [0, inf) is a delta / (beta - 1).
    std::vector<double> alpha(b.size());
    for (std::size_t k = 0; k < b.size(); ++k) alpha[k] = b[k] * (beta - 1.0) / delta;
    return make_power_law_kernel(default_baselines(), std::move(alpha), std::vector<double>(b.size(), beta),
                                 std::vector<double>(b.size(), delta));
}

json kernel_to_json(const KernelParams& k) {
    const std::size_t m = k.dim();
    if (k.kind == KernelKind::Exponential) {
        return {{"kind", "exponential"}, {"mu", k.mu}, {"alpha", matrix_json(k.alpha, m)},
                {"gamma", matrix_json(k.gamma, m)}};
    }
    return {{"kind", "power_law"},
            {"mu", k.mu},
            {"alpha_pl", matrix_json(k.alpha_pl, m)},
            {"beta_pl", matrix_json(k.beta_pl, m)},
            {"delta_pl", matrix_json(k.delta_pl, m)},
            {"truncation_horizon", k.truncation_horizon}};
}

KernelParams kernel_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    auto mu = j.at("mu").get<std::vector<double>>();
    const std::size_t m = mu.size();
    if (kind == "exponential") {
        check_keys(j, {"kind", "mu", "alpha", "gamma"}, "kernel");
        return make_exponential_kernel(std::move(mu), flatten_matrix(j.at("alpha"), m, "alpha"),
                                       flatten_matrix(j.at("gamma"), m, "gamma"));
    }
    if (kind == "power_law") {
        check_keys(j, {"kind", "mu", "alpha_pl", "beta_pl", "delta_pl", "truncation_horizon"}, "kernel");
        return make_power_law_kernel(std::move(mu), flatten_matrix(j.at("alpha_pl"), m, "alpha_pl"),
                                     flatten_matrix(j.at("beta_pl"), m, "beta_pl"),
                                     flatten_matrix(j.at("delta_pl"), m, "delta_pl"),
                                     j.value("truncation_horizon", 60.0));
    }
    throw std::invalid_argument("kernel: unknown kind '" + kind + "' (expected exponential or power_law)");
}

json episode_to_json(const EpisodeConfig& c) {
    return {{"horizon", c.horizon},
            {"decision_interval", c.decision_interval},
            {"eta", c.eta},
            {"kappa", c.kappa},
            {"fee_bps", c.fee_bps},
            {"initial_cash", c.initial_cash},
            {"action_set", action_set_name(c.action_set)},
            {"seed", c.seed},
            {"history_window", c.history_window},
            {"random_initial_inventory", c.random_initial_inventory},
            {"initial_state",
             {{"mid_mean", c.initial_state.mid_mean},
              {"mid_variance", c.initial_state.mid_variance},
              {"spread_geometric_p", c.initial_state.spread_geometric_p},
              {"inventory_variance", c.initial_state.inventory_variance},
              {"tick", c.initial_state.tick}}},
            {"replenish_p", c.replenish.p}};
}

EpisodeConfig episode_from_json(const json& j, EpisodeConfig c) {
    check_keys(j,
               {"horizon", "decision_interval", "eta", "kappa", "fee_bps", "initial_cash", "action_set", "seed",
                "history_window", "random_initial_inventory", "initial_state", "replenish_p"},
               "episode");
    read(j, "horizon", c.horizon);
    read(j, "decision_interval", c.decision_interval);
    read(j, "eta", c.eta);
    read(j, "kappa", c.kappa);
    read(j, "fee_bps", c.fee_bps);
    read(j, "initial_cash", c.initial_cash);
    if (j.contains("action_set")) c.action_set = parse_action_set(j.at("action_set").get<std::string>());
    read(j, "seed", c.seed);
    read(j, "history_window", c.history_window);
    read(j, "random_initial_inventory", c.random_initial_inventory);
    if (j.contains("initial_state")) {
        const json& s = j.at("initial_state");
        check_keys(s, {"mid_mean", "mid_variance", "spread_geometric_p", "inventory_variance", "tick"},
                   "episode.initial_state");
        read(s, "mid_mean", c.initial_state.mid_mean);
        read(s, "mid_variance", c.initial_state.mid_variance);
        read(s, "spread_geometric_p", c.initial_state.spread_geometric_p);
        read(s, "inventory_variance", c.initial_state.inventory_variance);
        read(s, "tick", c.initial_state.tick);
    }
    read(j, "replenish_p", c.replenish.p);
    c.validate();
    return c;
}

json trainer_to_json(const TrainerConfig& c) {
    return {{"clip_epsilon", c.clip_epsilon},
            {"discount", c.discount},
            {"gae_lambda", c.gae_lambda},
            {"sil_coef", c.sil_coef},
            {"entropy_coef", c.entropy_coef},
            {"value_coef", c.value_coef},
            {"epochs", c.epochs},
            {"minibatch_size", c.minibatch_size},
            {"episodes_per_update", c.episodes_per_update},
            {"total_episodes", c.total_episodes},
            {"learning_rate", c.learning_rate},
            {"hidden", c.hidden},
            {"activation", activation_name(c.activation)},
            {"sil_capacity", c.sil_capacity},
            {"sil_batch_size", c.sil_batch_size},
            {"sil_weighting", c.sil_weighting == SilWeighting::Indicator ? "indicator" : "clipped_advantage"},
            {"normalize_advantages", c.normalize_advantages},
            {"reward_scale", c.reward_scale},
            {"max_grad_norm", c.max_grad_norm},
            {"initial_decision_bias", c.initial_decision_bias},
            {"freeze_decision_updates", c.freeze_decision_updates},
            {"threads", c.threads},
            {"ablation", ablation_name(c.ablation)}};
}

TrainerConfig trainer_from_json(const json& j, TrainerConfig c) {
    check_keys(j,
               {"clip_epsilon", "discount", "gae_lambda", "sil_coef", "entropy_coef", "value_coef", "epochs",
                "minibatch_size", "episodes_per_update", "total_episodes", "learning_rate", "hidden", "activation",
                "sil_capacity", "sil_batch_size", "sil_weighting", "normalize_advantages", "reward_scale",
                "max_grad_norm", "initial_decision_bias", "freeze_decision_updates", "threads", "ablation"},
               "trainer");
    read(j, "clip_epsilon", c.clip_epsilon);
    read(j, "discount", c.discount);
    read(j, "gae_lambda", c.gae_lambda);
    read(j, "sil_coef", c.sil_coef);
    read(j, "entropy_coef", c.entropy_coef);
    read(j, "value_coef", c.value_coef);
    read(j, "epochs", c.epochs);
    read(j, "minibatch_size", c.minibatch_size);
    read(j, "episodes_per_update", c.episodes_per_update);
    read(j, "total_episodes", c.total_episodes);
    read(j, "learning_rate", c.learning_rate);
    read(j, "hidden", c.hidden);
    if (j.contains("activation")) c.activation = parse_activation(j.at("activation").get<std::string>());
    read(j, "sil_capacity", c.sil_capacity);
    read(j, "sil_batch_size", c.sil_batch_size);
    if (j.contains("sil_weighting")) {
        const std::string w = j.at("sil_weighting").get<std::string>();
        if (w == "indicator") {
            c.sil_weighting = SilWeighting::Indicator;
        } else if (w == "clipped_advantage") {
            c.sil_weighting = SilWeighting::ClippedAdvantage;
        } else {
            throw std::invalid_argument("trainer: unknown sil_weighting '" + w +
                                        "' (expected indicator or clipped_advantage)");
        }
    }
    read(j, "normalize_advantages", c.normalize_advantages);
    read(j, "reward_scale", c.reward_scale);
    read(j, "max_grad_norm", c.max_grad_norm);
    read(j, "initial_decision_bias", c.initial_decision_bias);
    read(j, "freeze_decision_updates", c.freeze_decision_updates);
    read(j, "threads", c.threads);
    if (j.contains("ablation")) c.ablation = parse_ablation(j.at("ablation").get<std::string>());
    c.validate();
    return c;
}

json prob_agent_to_json(const ProbAgentConfig& c) {
    return {{"inventory_threshold", c.inventory_threshold}, {"skew_threshold", c.skew_threshold}};
}

ProbAgentConfig prob_agent_from_json(const json& j, ProbAgentConfig c) {
    check_keys(j, {"inventory_threshold", "skew_threshold"}, "prob_agent");
    read(j, "inventory_threshold", c.inventory_threshold);
    read(j, "skew_threshold", c.skew_threshold);
    c.validate();
    return c;
}

json RunConfig::to_json() const {
    json sweep_json = {{"eta", sweep.eta},   {"fee_bps", sweep.fee_bps},   {"kernel", sweep.kernel},
                       {"sil", sweep.sil},   {"ablation", sweep.ablation}, {"kernels", json::object()}};
    for (const auto& [name, k] : sweep.kernels) sweep_json["kernels"][name] = kernel_to_json(k);
    return {{"kernel", kernel_to_json(kernel)},
            {"kernel_name", kernel_name},
            {"episode", episode_to_json(episode)},
            {"trainer", trainer_to_json(trainer)},
            {"prob_agent", prob_agent_to_json(prob_agent)},
            {"eval",
             {{"episodes", eval.episodes},
              {"trace_episodes", eval.trace_episodes},
              {"greedy", eval.greedy},
              {"prob_agent_full_action_set", eval.prob_agent_full_action_set}}},
            {"sweep", sweep_json}};
}

RunConfig RunConfig::from_json(const json& j) {
    check_keys(j, {"kernel", "kernel_name", "episode", "trainer", "prob_agent", "eval", "sweep"}, "config");
    RunConfig c;
    if (j.contains("kernel")) {
        c.kernel = kernel_from_json(j.at("kernel"));
        c.kernel_name = c.kernel.kind == KernelKind::Exponential ? "exponential" : "power_law";
    }
    read(j, "kernel_name", c.kernel_name);
    if (j.contains("episode")) c.episode = episode_from_json(j.at("episode"));
    if (j.contains("trainer")) c.trainer = trainer_from_json(j.at("trainer"));
    if (j.contains("prob_agent")) c.prob_agent = prob_agent_from_json(j.at("prob_agent"));
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        check_keys(e, {"episodes", "trace_episodes", "greedy", "prob_agent_full_action_set"}, "eval");
        read(e, "episodes", c.eval.episodes);
        read(e, "trace_episodes", c.eval.trace_episodes);
        read(e, "greedy", c.eval.greedy);
        read(e, "prob_agent_full_action_set", c.eval.prob_agent_full_action_set);
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        check_keys(s, {"eta", "fee_bps", "kernel", "sil", "ablation", "kernels"}, "sweep");
        read(s, "eta", c.sweep.eta);
        read(s, "fee_bps", c.sweep.fee_bps);
        read(s, "kernel", c.sweep.kernel);
        read(s, "sil", c.sweep.sil);
        read(s, "ablation", c.sweep.ablation);
        if (s.contains("kernels")) {
            for (const auto& [name, kj] : s.at("kernels").items()) {
                c.sweep.kernels.emplace_back(name, kernel_from_json(kj));
            }
        }
        for (const auto& a : c.sweep.ablation) (void)parse_ablation(a);
        for (const auto& k : c.sweep.kernel) (void)kernel_by_name(k, c.sweep);
    }
    if (c.kernel.dim() != kNumEventTypes) {
        throw std::invalid_argument("config: the market kernel must have 12 event types");
    }
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open config file '" + path.string() + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return from_json(j);
}

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.sweep.fee_bps = {1.0, 2.0, 4.0, 8.0};
    if (name == "default") {
        return c;
    }
    if (name == "poisson") {
        c.kernel = default_poisson_kernel();
        c.kernel_name = "poisson";
        // At eta = 10 holding one unit for a second costs far more than a
        // fill earns (half a tick), so the reward optimum is never to quote.
        c.episode.eta = 0.001;
        c.trainer.total_episodes = 200;
        c.trainer.reward_scale = 10.0;
        return c;
    }
    if (name == "power_law") {
        c.kernel = default_power_law_kernel();
        c.kernel_name = "power_law";
        return c;
    }
    throw std::invalid_argument("unknown preset '" + name + "' (expected default, poisson or power_law)");
}

KernelParams kernel_by_name(const std::string& name, const SweepGrid& grid) {
    for (const auto& [n, k] : grid.kernels) {
        if (n == name) return k;
    }
    if (name == "exponential") return default_exponential_kernel();
    if (name == "power_law") return default_power_law_kernel();
    if (name == "poisson") return default_poisson_kernel();
    throw std::invalid_argument("unknown kernel name '" + name + "'");
}

std::uint64_t config_hash(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

} // namespace hawkesmm
