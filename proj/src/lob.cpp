#include "hawkesmm/lob.hpp"

#include <cmath>
#include <string>

namespace hawkesmm {

void BookState::validate() const {
    if (!(tick > 0.0)) {
        throw ContractViolation("BookState: tick must be > 0");
    }
    if (ask_ticks - bid_ticks < 1) {
        throw ContractViolation("BookState: crossed or locked book");
    }
    if (q_ask < 1 || q_bid < 1 || q_ask_deep < 1 || q_bid_deep < 1) {
        throw ContractViolation("BookState: queue sizes must be >= 1");
    }
}

void validate(const BookState& book, const AgentBookState& agent) {
    book.validate();
    for (Side s : {Side::Ask, Side::Bid}) {
        if (const auto& n = agent.priority(s); n) {
            if (*n < 0 || *n >= book.top(s) + book.deep(s)) {
                throw ContractViolation("AgentBookState: priority out of range on " + std::string(side_name(s)));
            }
        }
    }
}

bool agent_in_top(const BookState& book, const AgentBookState& agent, Side s) noexcept {
    const auto& n = agent.priority(s);
    return n && *n < book.top(s);
}

double QueueRedrawPolicy::probability(std::int64_t k) const {
    if (k < 1) {
        return 0.0;
    }
    return p * std::pow(1.0 - p, static_cast<double>(k - 1));
}

std::vector<std::pair<std::int64_t, double>> QueueRedrawPolicy::support(double tail) const {
    std::vector<std::pair<std::int64_t, double>> out;
    double mass = 0.0;
    for (std::int64_t k = 1;; ++k) {
        const double w = probability(k);
        out.emplace_back(k, w);
        mass += w;
        if (1.0 - mass < tail || p >= 1.0) {
            break;
        }
    }
    out.back().second += 1.0 - mass;
    return out;
}

namespace detail {

void consume_top(BookState& book, Side s, std::int64_t redraw) {
    std::int64_t& q = book.top(s);
    if (q > 1) {
        --q;
        return;
    }
    // Top level empties: the second level becomes the best price one tick further out.
    book.price_ticks(s) -= toward_spread(s);
    q = book.deep(s);
    book.deep(s) = redraw;
}

void consume_deep(BookState& book, Side s, std::int64_t redraw) {
    std::int64_t& qd = book.deep(s);
    if (qd > 1) {
        --qd;
        return;
    }
    qd = redraw;
}

} // namespace detail

namespace {

bool cancel_top_is_noop(const BookState& book, const AgentBookState& agent, Side s) {
    // The only order at the top is the agent's own; nobody else can cancel it.
    return agent_in_top(book, agent, s) && book.top(s) == 1;
}

bool cancel_deep_is_noop(const BookState& book, const AgentBookState& agent, Side s) {
    return agent.resting(s) && !agent_in_top(book, agent, s) && book.deep(s) == 1;
}

} // namespace

EventRandomness event_randomness(const BookState& book, const AgentBookState& agent, EventType e) {
    const Side s = event_side(e);
    const auto& n = agent.priority(s);
    EventRandomness r;
    switch (event_action(e)) {
    case EventAction::LimitTop:
    case EventAction::LimitDeep:
    case EventAction::LimitInSpread: break;
    case EventAction::CancelTop:
        if (cancel_top_is_noop(book, agent, s)) {
            break;
        }
        if (n && *n > 0 && *n < book.top(s)) {
            // With nobody behind the agent at this level the cancel must hit an order ahead.
            r.cancel_ahead_probability =
                *n == book.top(s) - 1 ? 1.0 : static_cast<double>(*n) / static_cast<double>(book.top(s));
        }
        r.needs_redraw = book.top(s) == 1;
        break;
    case EventAction::CancelDeep:
        if (cancel_deep_is_noop(book, agent, s)) {
            break;
        }
        if (n && *n > book.top(s)) {
            r.cancel_ahead_probability = *n == book.top(s) + book.deep(s) - 1
                                             ? 1.0
                                             : static_cast<double>(*n - book.top(s)) / static_cast<double>(book.deep(s));
        }
        r.needs_redraw = book.deep(s) == 1;
        break;
    case EventAction::Market: r.needs_redraw = book.top(s) == 1; break;
    }
    return r;
}

Transition apply_event(const BookState& book, const AgentBookState& agent, EventType e, const EventOutcome& outcome) {
    Transition out{book, agent, std::nullopt};
    BookState& b = out.book;
    AgentBookState& a = out.agent;
    const Side s = event_side(e);
    auto& n = a.priority(s);

    switch (event_action(e)) {
    case EventAction::LimitTop: ++b.top(s); break;
    case EventAction::LimitDeep: ++b.deep(s); break;
    case EventAction::LimitInSpread:
        if (b.spread_ticks() <= 1) {
            break;
        }
        if (n) {
            // The agent moves one level back; an order already at the second
            // level falls out of the two tracked levels and is dropped.
            if (*n < b.top(s)) {
                ++*n;
            } else {
                n.reset();
            }
        }
        b.deep(s) = b.top(s);
        b.top(s) = 1;
        b.price_ticks(s) += detail::toward_spread(s);
        break;
    case EventAction::CancelTop:
        if (cancel_top_is_noop(book, agent, s)) {
            break;
        }
        if (n) {
            if (*n >= b.top(s)) {
                --*n;
            } else if (*n > 0 && outcome.cancel_ahead) {
                --*n;
            }
        }
        detail::consume_top(b, s, outcome.redraw);
        break;
    case EventAction::CancelDeep:
        if (cancel_deep_is_noop(book, agent, s)) {
            break;
        }
        if (n && *n > b.top(s) && outcome.cancel_ahead) {
            --*n;
        }
        detail::consume_deep(b, s, outcome.redraw);
        break;
    case EventAction::Market:
        if (n && *n == 0) {
            const double px = b.price(s);
            out.fill = Fill{s, px};
            if (s == Side::Ask) {
                a.inventory -= 1;
                a.cash += px;
            } else {
                a.inventory += 1;
                a.cash -= px;
            }
            n.reset();
        } else if (n) {
            --*n;
        }
        detail::consume_top(b, s, outcome.redraw);
        break;
    }
    return out;
}

Transition apply_event(const BookState& book, const AgentBookState& agent, EventType e, Rng& rng,
                       const QueueRedrawPolicy& replenish) {
    const EventRandomness need = event_randomness(book, agent, e);
    EventOutcome outcome;
    if (need.cancel_ahead_probability > 0.0) {
        outcome.cancel_ahead = bernoulli(rng, need.cancel_ahead_probability);
    }
    if (need.needs_redraw) {
        outcome.redraw = replenish.draw(rng);
    }
    return apply_event(book, agent, e, outcome);
}

std::vector<WeightedTransition> enumerate_event(const BookState& book, const AgentBookState& agent, EventType e,
                                                const QueueRedrawPolicy& replenish) {
    const EventRandomness need = event_randomness(book, agent, e);
    std::vector<std::pair<bool, double>> cancel_branches;
    if (need.cancel_ahead_probability > 0.0) {
        cancel_branches = {{true, need.cancel_ahead_probability}, {false, 1.0 - need.cancel_ahead_probability}};
    } else {
        cancel_branches = {{false, 1.0}};
    }
    std::vector<std::pair<std::int64_t, double>> redraws =
        need.needs_redraw ? replenish.support() : std::vector<std::pair<std::int64_t, double>>{{1, 1.0}};

    std::vector<WeightedTransition> out;
    out.reserve(cancel_branches.size() * redraws.size());
    for (const auto& [cancel, wc] : cancel_branches) {
        for (const auto& [size, wr] : redraws) {
            if (wc * wr == 0.0) {
                continue;
            }
            out.push_back({wc * wr, apply_event(book, agent, e, EventOutcome{cancel, size})});
        }
    }
    return out;
}

double mark_to_market(const BookState& book, const AgentBookState& agent) noexcept {
    return agent.cash + static_cast<double>(agent.inventory) * book.p_mid();
}

BookState sample_initial_book(const InitialStateConfig& cfg, const QueueRedrawPolicy& replenish, Rng& rng) {
    BookState b;
    b.tick = cfg.tick;
    const double mid = cfg.mid_mean + std::sqrt(cfg.mid_variance) * standard_normal(rng);
    const std::int64_t spread = 1 + geometric_failures(rng, cfg.spread_geometric_p);
    b.bid_ticks = std::llround(mid / cfg.tick - 0.5 * static_cast<double>(spread));
    b.ask_ticks = b.bid_ticks + spread;
    b.q_ask = replenish.draw(rng);
    b.q_bid = replenish.draw(rng);
    b.q_ask_deep = replenish.draw(rng);
    b.q_bid_deep = replenish.draw(rng);
    return b;
}

std::int64_t sample_initial_inventory(const InitialStateConfig& cfg, Rng& rng) {
    return std::llround(std::sqrt(cfg.inventory_variance) * standard_normal(rng));
}

std::optional<EventType> parse_event_type(std::string_view name) {
    for (std::size_t i = 0; i < kNumEventTypes; ++i) {
        if (kEventTypeNames[i] == name) {
            return static_cast<EventType>(i);
        }
    }
    return std::nullopt;
}

} // namespace hawkesmm
