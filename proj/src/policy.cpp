#include "hawkesmm/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hawkesmm {

const char* ablation_name(Ablation a) noexcept {
    switch (a) {
    case Ablation::None: return "none";
    case Ablation::History: return "history";
    case Ablation::Intensity: return "intensity";
    case Ablation::Spread: return "spread";
    case Ablation::RelativePosition: return "relative-position";
    }
    return "none";
}

Ablation parse_ablation(const std::string& name) {
    for (Ablation a : {Ablation::None, Ablation::History, Ablation::Intensity, Ablation::Spread,
                       Ablation::RelativePosition}) {
        if (name == ablation_name(a)) return a;
    }
    throw std::invalid_argument("unknown ablation '" + name +
                                "' (expected none, history, intensity, spread or relative-position)");
}

nlohmann::json FeatureScaling::to_json() const {
    return {{"initial_cash", initial_cash},       {"price_scale", price_scale}, {"inventory_scale", inventory_scale},
            {"tick", tick},                       {"intensity_scale", intensity_scale},
            {"count_scale", count_scale},         {"history_window", history_window},
            {"horizon", horizon}};
}

FeatureScaling FeatureScaling::from_json(const nlohmann::json& j) {
    FeatureScaling s;
    s.initial_cash = j.at("initial_cash").get<double>();
    s.price_scale = j.at("price_scale").get<double>();
    s.inventory_scale = j.at("inventory_scale").get<double>();
    s.tick = j.at("tick").get<double>();
    s.intensity_scale = j.at("intensity_scale").get<double>();
    s.count_scale = j.at("count_scale").get<double>();
    s.history_window = j.at("history_window").get<double>();
    s.horizon = j.at("horizon").get<double>();
    return s;
}

FeatureScaling feature_scaling_for(const EpisodeConfig& config, const KernelParams& kernel) {
    FeatureScaling s;
    s.initial_cash = config.initial_cash;
    s.price_scale = config.initial_state.mid_mean > 0.0 ? config.initial_state.mid_mean : 1.0;
    s.tick = config.initial_state.tick;
    const double mu_mean =
        kernel.mu.empty() ? 0.0 : std::accumulate(kernel.mu.begin(), kernel.mu.end(), 0.0) / kernel.mu.size();
    s.intensity_scale = mu_mean > 0.0 ? mu_mean : 1.0;
    s.history_window = config.history_window;
    s.count_scale = std::max(1.0, 5.0 * s.intensity_scale * config.history_window);
    s.horizon = config.horizon;
    return s;
}

std::vector<double> make_features(const Observation& obs, const FeatureScaling& s, Ablation ablation) {
    if (obs.intensities.size() != kNumEventTypes || obs.history_counts.size() != kNumEventTypes) {
        throw std::invalid_argument("make_features: observation must carry 12 intensities and 12 counts");
    }
    std::vector<double> f(kNumFeatures, 0.0);
    f[0] = (obs.cash - s.initial_cash) / s.price_scale;
    f[1] = obs.inventory / s.inventory_scale;
    f[kFeatureSpread] = obs.spread / s.tick - 1.0;
    f[kFeatureRelPos] = obs.rel_pos_ask;
    f[kFeatureRelPos + 1] = obs.rel_pos_bid;
    for (std::size_t i = 0; i < kNumEventTypes; ++i) {
        f[kFeatureIntensity + i] = obs.intensities[i] / s.intensity_scale - 1.0;
        f[kFeatureHistory + i] = obs.history_counts[i] / s.count_scale;
    }
    f[kFeatureSinceLast] = obs.time_since_last / s.history_window;
    f[30] = obs.time_remaining / s.horizon;

    auto zero = [&](std::size_t from, std::size_t n) { std::fill_n(f.begin() + static_cast<long>(from), n, 0.0); };
    switch (ablation) {
    case Ablation::None: break;
    case Ablation::History: zero(kFeatureHistory, kNumEventTypes + 1); break;
    case Ablation::Intensity: zero(kFeatureIntensity, kNumEventTypes); break;
    case Ablation::Spread: zero(kFeatureSpread, 1); break;
    case Ablation::RelativePosition: zero(kFeatureRelPos, 2); break;
    }
    return f;
}

PolicyNetworks PolicyNetworks::create(std::size_t num_features, std::size_t num_actions,
                                      const std::vector<std::size_t>& hidden, Activation activation, Rng& rng) {
    auto sizes = [&](std::size_t out) {
        std::vector<std::size_t> s{num_features};
        s.insert(s.end(), hidden.begin(), hidden.end());
        s.push_back(out);
        return s;
    };
    PolicyNetworks p;
    p.decision = DenseNet(sizes(1), activation, rng);
    p.action = DenseNet(sizes(num_actions), activation, rng);
    p.value = DenseNet(sizes(1), activation, rng);
    return p;
}

nlohmann::json PolicyNetworks::to_json() const {
    return {{"decision", decision.to_json()}, {"action", action.to_json()}, {"value", value.to_json()}};
}

PolicyNetworks PolicyNetworks::from_json(const nlohmann::json& j) {
    PolicyNetworks p;
    p.decision = DenseNet::from_json(j.at("decision"));
    p.action = DenseNet::from_json(j.at("action"));
    p.value = DenseNet::from_json(j.at("value"));
    if (p.decision.output_size() != 1 || p.value.output_size() != 1 ||
        p.decision.input_size() != p.action.input_size() || p.decision.input_size() != p.value.input_size()) {
        throw std::invalid_argument("PolicyNetworks::from_json: inconsistent network shapes");
    }
    return p;
}

PolicyOutput evaluate(const PolicyNetworks& nets, std::span<const double> features) {
    PolicyOutput out;
    out.decision_logit = nets.decision.forward(features)[0];
    out.action_logits = nets.action.forward(features);
    out.value = nets.value.forward(features)[0];
    return out;
}

double log_sigmoid(double z) noexcept { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

bool any_admissible(const std::vector<bool>& mask) noexcept {
    return std::find(mask.begin(), mask.end(), true) != mask.end();
}

std::vector<double> masked_softmax(std::span<const double> logits, const std::vector<bool>& mask) {
    if (mask.size() != logits.size()) {
        throw std::invalid_argument("masked_softmax: mask size does not match logits");
    }
    std::vector<double> p(logits.size(), 0.0);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < logits.size(); ++k) {
        if (mask[k]) top = std::max(top, logits[k]);
    }
    if (!std::isfinite(top)) return p;
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        if (mask[k]) {
            p[k] = std::exp(logits[k] - top);
            total += p[k];
        }
    }
    for (double& v : p) v /= total;
    return p;
}

double joint_log_prob(const PolicyOutput& out, const std::vector<bool>& mask, bool intervene, std::size_t action) {
    if (!intervene) {
        return log_sigmoid(-out.decision_logit);
    }
    if (action >= mask.size() || !mask[action]) {
        throw std::invalid_argument("joint_log_prob: recorded action is not admissible under its mask");
    }
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < mask.size(); ++k) {
        if (mask[k]) top = std::max(top, out.action_logits[k]);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < mask.size(); ++k) {
        if (mask[k]) total += std::exp(out.action_logits[k] - top);
    }
    return log_sigmoid(out.decision_logit) + (out.action_logits[action] - top - std::log(total));
}

double policy_entropy(const PolicyOutput& out, const std::vector<bool>& mask) {
    const double z = out.decision_logit;
    const double s = sigmoid(z);
    const double h_d = -(s * log_sigmoid(z) + (1.0 - s) * log_sigmoid(-z));
    double h_a = 0.0;
    for (double p : masked_softmax(out.action_logits, mask)) {
        if (p > 0.0) h_a -= p * std::log(p);
    }
    return h_d + s * h_a;
}

ActResult act(const PolicyNetworks& nets, std::span<const double> features, const std::vector<bool>& mask, Rng& rng,
              bool greedy) {
    if (mask.size() != nets.num_actions()) {
        throw std::invalid_argument("act: mask size does not match the action head");
    }
    const PolicyOutput out = evaluate(nets, features);
    ActResult r;
    r.value = out.value;
    r.intervene_probability = sigmoid(out.decision_logit);
    const bool possible = any_admissible(mask);
    // The draws happen unconditionally so that the stream position does not
    // depend on the mask.
    const double u_decision = uniform01(rng);
    const double u_action = uniform01(rng);
    if (possible) {
        r.intervene = greedy ? r.intervene_probability > 0.5 : u_decision < r.intervene_probability;
    }
    if (r.intervene) {
        const auto p = masked_softmax(out.action_logits, mask);
        std::size_t chosen = 0;
        if (greedy) {
            chosen = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        } else {
            double acc = 0.0;
            chosen = p.size();
            for (std::size_t k = 0; k < p.size(); ++k) {
                if (!mask[k]) continue;
                acc += p[k];
                chosen = k;
                if (u_action < acc) break;
            }
        }
        r.action = chosen;
    }
    r.log_prob = joint_log_prob(out, mask, r.intervene, r.action.value_or(0));
    return r;
}

} // namespace hawkesmm
