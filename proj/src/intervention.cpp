#include "hawkesmm/intervention.hpp"

#include <string>

namespace hawkesmm {

Impulse impulse_from_index(std::size_t i) {
    if (i >= kNumImpulses) {
        throw ContractViolation("impulse index out of range: " + std::to_string(i));
    }
    return static_cast<Impulse>(i);
}

std::optional<Impulse> parse_impulse(std::string_view name) {
    for (std::size_t i = 0; i < kNumImpulses; ++i) {
        if (kImpulseNames[i] == name) {
            return static_cast<Impulse>(i);
        }
    }
    return std::nullopt;
}

bool admissible(const BookState& book, const AgentBookState& agent, Impulse p) noexcept {
    const Side s = impulse_side(p);
    const auto& n = agent.priority(s);
    switch (impulse_kind(p)) {
    case ImpulseKind::LimitTop:
    case ImpulseKind::LimitDeep: return !n;
    case ImpulseKind::LimitInSpread: return !n && book.spread_ticks() > 1;
    case ImpulseKind::CancelTop: return n.has_value();
    case ImpulseKind::Market: return !(n && *n == 0);
    }
    return false;
}

std::vector<bool> admissible_mask(const BookState& book, const AgentBookState& agent, ActionSet set) {
    std::vector<bool> mask(action_count(set));
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = admissible(book, agent, static_cast<Impulse>(i));
    }
    return mask;
}

bool impulse_needs_redraw(const BookState& book, const AgentBookState& agent, Impulse p) noexcept {
    const Side s = impulse_side(p);
    switch (impulse_kind(p)) {
    case ImpulseKind::CancelTop:
        if (!agent.resting(s)) {
            return false;
        }
        return agent_in_top(book, agent, s) ? book.top(s) == 1 : book.deep(s) == 1;
    case ImpulseKind::Market: return book.top(s) == 1;
    default: return false;
    }
}

ImpulseResult apply_impulse(const BookState& book, const AgentBookState& agent, Impulse p, std::int64_t redraw) {
    if (!admissible(book, agent, p)) {
        throw InadmissibleImpulse("inadmissible impulse " + std::string(impulse_name(p)));
    }
    ImpulseResult out{book, agent, 0.0};
    BookState& b = out.book;
    AgentBookState& a = out.agent;
    const Side s = impulse_side(p);
    auto& n = a.priority(s);

    switch (impulse_kind(p)) {
    case ImpulseKind::LimitTop:
        n = b.top(s);
        ++b.top(s);
        break;
    case ImpulseKind::LimitDeep:
        n = b.top(s) + b.deep(s);
        ++b.deep(s);
        break;
    case ImpulseKind::LimitInSpread:
        b.deep(s) = b.top(s);
        b.top(s) = 1;
        b.price_ticks(s) += detail::toward_spread(s);
        n = 0;
        break;
    case ImpulseKind::CancelTop:
        if (*n < b.top(s)) {
            detail::consume_top(b, s, redraw);
        } else {
            detail::consume_deep(b, s, redraw);
        }
        n.reset();
        break;
    case ImpulseKind::Market: {
        const double px = b.price(s);
        if (s == Side::Ask) {
            a.cash -= px;
            a.inventory += 1;
            out.instantaneous_profit = -px;
        } else {
            a.cash += px;
            a.inventory -= 1;
            out.instantaneous_profit = px;
        }
        if (n) {
            --*n;
        }
        detail::consume_top(b, s, redraw);
        break;
    }
    }
    return out;
}

ImpulseResult apply_impulse(const BookState& book, const AgentBookState& agent, Impulse p, Rng& rng,
                            const QueueRedrawPolicy& replenish) {
    if (!admissible(book, agent, p)) {
        throw InadmissibleImpulse("inadmissible impulse " + std::string(impulse_name(p)));
    }
    const std::int64_t redraw = impulse_needs_redraw(book, agent, p) ? replenish.draw(rng) : 1;
    return apply_impulse(book, agent, p, redraw);
}

std::vector<WeightedImpulseResult> enumerate_impulse(const BookState& book, const AgentBookState& agent, Impulse p,
                                                     const QueueRedrawPolicy& replenish) {
    std::vector<WeightedImpulseResult> out;
    if (!impulse_needs_redraw(book, agent, p)) {
        out.push_back({1.0, apply_impulse(book, agent, p, 1)});
        return out;
    }
    for (const auto& [size, w] : replenish.support()) {
        out.push_back({w, apply_impulse(book, agent, p, size)});
    }
    return out;
}

} // namespace hawkesmm
