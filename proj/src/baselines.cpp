#include "hawkesmm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hawkesmm {

namespace {

bool allowed(const std::vector<bool>& mask, Impulse p) {
    const std::size_t i = index_of(p);
    return i < mask.size() && mask[i];
}

bool resting(const Observation& obs, Side s) {
    return (s == Side::Ask ? obs.rel_pos_ask : obs.rel_pos_bid) != kNotResting;
}

} // namespace

void ProbAgentConfig::validate() const {
    if (inventory_threshold < 1) {
        throw std::invalid_argument("ProbAgentConfig: inventory_threshold must be >= 1");
    }
    if (!(skew_threshold >= 0.0)) {
        throw std::invalid_argument("ProbAgentConfig: skew_threshold must be >= 0");
    }
}

Action prob_agent_act(const Observation& obs, const ProbAgentConfig& config, const std::vector<bool>& mask) {
    const double y = obs.inventory;
    if (std::abs(y) > static_cast<double>(config.inventory_threshold)) {
        const Impulse corrective = y > 0 ? Impulse::MO_bid : Impulse::MO_ask;
        if (allowed(mask, corrective)) {
            return Action::act(corrective);
        }
    }

    // Normalising does not change the argmax, so the most probable next event
    // is the most intense type (ties resolved by canonical index).
    const auto& lam = obs.intensities;
    double total = 0.0;
    for (double l : lam) total += l;
    if (total > 0.0) {
        const std::size_t top = static_cast<std::size_t>(std::max_element(lam.begin(), lam.end()) - lam.begin());
        const EventType e = event_from_index(top);
        if (e == EventType::MO_bid || e == EventType::MO_ask) {
            // MO_bid pressure: quote the bid, or pull the ask; MO_ask mirrors it.
            const Side quote = e == EventType::MO_bid ? Side::Bid : Side::Ask;
            const Side pull = opposite(quote);
            if (!resting(obs, quote) && allowed(mask, make_impulse(ImpulseKind::LimitTop, quote))) {
                return Action::act(make_impulse(ImpulseKind::LimitTop, quote));
            }
            if (resting(obs, pull) && allowed(mask, make_impulse(ImpulseKind::CancelTop, pull))) {
                return Action::act(make_impulse(ImpulseKind::CancelTop, pull));
            }
            return Action::hold();
        }
    }

    const double ask = resting(obs, Side::Ask) ? 1.0 : 0.0;
    const double bid = resting(obs, Side::Bid) ? 1.0 : 0.0;
    if (std::abs(ask - bid) >= config.skew_threshold && config.skew_threshold > 0.0) {
        const Side missing = ask < bid ? Side::Ask : Side::Bid;
        const Impulse p = make_impulse(ImpulseKind::LimitTop, missing);
        if (allowed(mask, p)) {
            return Action::act(p);
        }
    }
    return Action::hold();
}

Action random_agent_act(const std::vector<bool>& mask, Rng& rng) {
    const bool intervene = bernoulli(rng, 0.5);
    const double u = uniform01(rng);
    std::vector<std::size_t> options;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) options.push_back(i);
    }
    if (!intervene || options.empty()) {
        return Action::hold();
    }
    const auto k = std::min(options.size() - 1, static_cast<std::size_t>(u * static_cast<double>(options.size())));
    return Action::act(impulse_from_index(options[k]));
}

} // namespace hawkesmm
