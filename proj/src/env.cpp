#include "hawkesmm/env.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace hawkesmm {

namespace {

enum : std::uint64_t { kInitStream = 1, kHawkesStream = 2, kBookStream = 3 };

double relative_position(const BookState& book, const AgentBookState& agent, Side s) {
    const auto& n = agent.priority(s);
    if (!n) {
        return kNotResting;
    }
    return std::min(1.0, static_cast<double>(*n) / static_cast<double>(book.top(s)));
}

} // namespace

std::size_t EpisodeConfig::num_steps() const {
    return static_cast<std::size_t>(std::llround(horizon / decision_interval));
}

void EpisodeConfig::validate() const {
    auto fail = [](const char* what) { throw std::invalid_argument(std::string("EpisodeConfig: ") + what); };
    if (!(horizon > 0.0)) fail("horizon must be > 0");
    if (!(decision_interval > 0.0)) fail("decision_interval must be > 0");
    const double ratio = horizon / decision_interval;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || std::round(ratio) < 1.0) {
        fail("horizon must be an integral multiple of decision_interval");
    }
    if (!(eta >= 0.0) || !(kappa >= 0.0) || !(fee_bps >= 0.0)) fail("eta, kappa and fee_bps must be >= 0");
    if (!std::isfinite(initial_cash)) fail("initial_cash must be finite");
    if (!(history_window > 0.0)) fail("history_window must be > 0");
    if (!(replenish.p > 0.0 && replenish.p <= 1.0)) fail("replenish p must be in (0, 1]");
    if (!(initial_state.tick > 0.0)) fail("tick must be > 0");
    if (!(initial_state.spread_geometric_p > 0.0 && initial_state.spread_geometric_p <= 1.0)) {
        fail("spread geometric p must be in (0, 1]");
    }
    if (!(initial_state.mid_variance >= 0.0) || !(initial_state.inventory_variance >= 0.0)) {
        fail("variances must be >= 0");
    }
}

MarketMakingEnv::MarketMakingEnv(std::shared_ptr<const KernelParams> kernel, EpisodeConfig config)
    : kernel_(std::move(kernel)), config_(config), num_steps_(0) {
    if (!kernel_) {
        throw std::invalid_argument("MarketMakingEnv: null kernel");
    }
    kernel_->validate();
    if (kernel_->dim() != kNumEventTypes) {
        throw std::invalid_argument("MarketMakingEnv: kernel must have 12 event types");
    }
    config_.validate();
    num_steps_ = config_.num_steps();
    step_ = num_steps_;
}

const HawkesClock& MarketMakingEnv::clock() const {
    if (!clock_) {
        throw ContractViolation("MarketMakingEnv: reset() has not been called");
    }
    return *clock_;
}

double MarketMakingEnv::time() const noexcept {
    return static_cast<double>(std::min(step_, num_steps_)) * config_.decision_interval;
}

Observation MarketMakingEnv::reset(std::optional<std::uint64_t> seed) {
    const std::uint64_t s = seed.value_or(config_.seed);
    Rng init_rng(derive_seed(s, kInitStream));
    hawkes_rng_.seed(derive_seed(s, kHawkesStream));
    book_rng_.seed(derive_seed(s, kBookStream));

    book_ = sample_initial_book(config_.initial_state, config_.replenish, init_rng);
    agent_ = AgentBookState{};
    agent_.cash = config_.initial_cash;
    if (config_.random_initial_inventory) {
        agent_.inventory = sample_initial_inventory(config_.initial_state, init_rng);
    }
    clock_.emplace(kernel_, config_.history_window, 0.0);
    step_ = 0;
    terminal_fee_ = 0.0;
    return observe();
}

std::vector<bool> MarketMakingEnv::admissible_mask() const {
    return hawkesmm::admissible_mask(book_, agent_, config_.action_set);
}

Observation MarketMakingEnv::observe() const {
    const HawkesClock& c = clock();
    Observation obs;
    obs.cash = agent_.cash;
    obs.inventory = static_cast<double>(agent_.inventory);
    obs.spread = book_.spread();
    obs.rel_pos_ask = relative_position(book_, agent_, Side::Ask);
    obs.rel_pos_bid = relative_position(book_, agent_, Side::Bid);
    obs.intensities = c.intensities();
    HistoryFeatures h = c.history_features(config_.history_window);
    obs.history_counts = std::move(h.counts);
    obs.time_since_last = h.time_since_last;
    obs.time_remaining = config_.horizon - time();
    return obs;
}

StepResult MarketMakingEnv::step(const Action& action) {
    if (!clock_ || done()) {
        throw ContractViolation("MarketMakingEnv::step called on a finished episode");
    }
    const double dt = config_.decision_interval;
    const bool last = step_ + 1 == num_steps_;
    const double t_end = last ? config_.horizon : static_cast<double>(step_ + 1) * dt;

    const double cash0 = agent_.cash;
    const double value0 = static_cast<double>(agent_.inventory) * book_.p_mid();

    StepResult out;
    if (action.impulse) {
        const Impulse p = *action.impulse;
        if (index_of(p) >= action_count(config_.action_set)) {
            throw InadmissibleImpulse("impulse " + std::string(impulse_name(p)) + " is outside the action set");
        }
        ImpulseResult r = apply_impulse(book_, agent_, p, book_rng_, config_.replenish);
        book_ = r.book;
        agent_ = r.agent;
        out.impulse_profit = r.instantaneous_profit;
    }
    out.held_inventory = agent_.inventory;

    while (auto ev = clock_->sample_next_event(hawkes_rng_, t_end)) {
        clock_->apply_event(ev->type, ev->time);
        Transition tr = apply_event(book_, agent_, event_from_index(ev->type), book_rng_, config_.replenish);
        book_ = tr.book;
        agent_ = tr.agent;
        if (tr.fill) {
            out.fills.push_back(*tr.fill);
        }
        ++out.events;
    }

    const double held = static_cast<double>(out.held_inventory);
    out.reward.inventory_penalty = -config_.eta * held * held * dt;
    out.reward.cash_delta = agent_.cash - cash0;
    out.reward.inventory_value_delta = static_cast<double>(agent_.inventory) * book_.p_mid() - value0;
    ++step_;
    if (last) {
        const double y = static_cast<double>(agent_.inventory);
        terminal_fee_ = config_.fee_bps * 1e-4 * std::abs(y) * book_.p_mid();
        out.reward.terminal_adjustment = -config_.kappa * y * y - terminal_fee_;
    }
    out.done = done();
    out.observation = observe();
    return out;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
    const auto old_precision = os.precision();
    os << std::setprecision(17);
    os << "t,X,Y,p_ask,p_bid,action,inventory_penalty,cash_delta,inventory_value_delta,terminal_adjustment,reward\n";
    for (const TraceRow& r : rows) {
        os << r.time << ',' << r.cash << ',' << r.inventory << ',' << r.p_ask << ',' << r.p_bid << ','
           << (r.action ? impulse_name(*r.action) : std::string_view("hold")) << ',' << r.reward.inventory_penalty
           << ',' << r.reward.cash_delta << ',' << r.reward.inventory_value_delta << ','
           << r.reward.terminal_adjustment << ',' << r.reward.total() << '\n';
    }
    os.precision(old_precision);
}

} // namespace hawkesmm
