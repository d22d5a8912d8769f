#pragma once

#include "hawkesmm/lob.hpp"

#include <array>
#include <bitset>
#include <cstddef>
#include <string_view>
#include <vector>

namespace hawkesmm {

/// The agent's order alphabet. The four top-of-book limit/cancel impulses
/// come first so that the restricted action set is the index prefix [0, 4).
enum class Impulse : std::uint8_t {
    LO_T_ask = 0,
    LO_T_bid,
    CO_T_ask,
    CO_T_bid,
    LO_D_ask,
    LO_D_bid,
    LO_IS_ask,
    LO_IS_bid,
    MO_ask,
    MO_bid,
};

inline constexpr std::size_t kNumImpulses = 10;
inline constexpr std::size_t kNumRestrictedImpulses = 4;

inline constexpr std::array<std::string_view, kNumImpulses> kImpulseNames{
    "LO_T_ask", "LO_T_bid", "CO_T_ask", "CO_T_bid", "LO_D_ask",
    "LO_D_bid", "LO_IS_ask", "LO_IS_bid", "MO_ask", "MO_bid",
};

enum class ActionSet { Restricted, Full };

[[nodiscard]] constexpr std::size_t action_count(ActionSet set) noexcept {
    return set == ActionSet::Restricted ? kNumRestrictedImpulses : kNumImpulses;
}

[[nodiscard]] constexpr std::size_t index_of(Impulse p) noexcept { return static_cast<std::size_t>(p); }
[[nodiscard]] Impulse impulse_from_index(std::size_t i);
[[nodiscard]] constexpr std::string_view impulse_name(Impulse p) noexcept { return kImpulseNames[index_of(p)]; }
[[nodiscard]] std::optional<Impulse> parse_impulse(std::string_view name);

[[nodiscard]] constexpr Side impulse_side(Impulse p) noexcept {
    return index_of(p) % 2 == 0 ? Side::Ask : Side::Bid;
}

enum class ImpulseKind : std::uint8_t { LimitTop, CancelTop, LimitDeep, LimitInSpread, Market };

[[nodiscard]] constexpr ImpulseKind impulse_kind(Impulse p) noexcept {
    switch (index_of(p) / 2) {
    case 0: return ImpulseKind::LimitTop;
    case 1: return ImpulseKind::CancelTop;
    case 2: return ImpulseKind::LimitDeep;
    case 3: return ImpulseKind::LimitInSpread;
    default: return ImpulseKind::Market;
    }
}

[[nodiscard]] constexpr Impulse make_impulse(ImpulseKind kind, Side s) noexcept {
    const std::size_t base = [&] {
        switch (kind) {
        case ImpulseKind::LimitTop: return 0;
        case ImpulseKind::CancelTop: return 2;
        case ImpulseKind::LimitDeep: return 4;
        case ImpulseKind::LimitInSpread: return 6;
        case ImpulseKind::Market: return 8;
        }
        return 0;
    }();
    return static_cast<Impulse>(base + (s == Side::Ask ? 0 : 1));
}

class InadmissibleImpulse : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] bool admissible(const BookState& book, const AgentBookState& agent, Impulse p) noexcept;

/// Admissibility of every impulse in `set`, indexed by impulse index.
[[nodiscard]] std::vector<bool> admissible_mask(const BookState& book, const AgentBookState& agent, ActionSet set);

struct ImpulseResult {
    BookState book;
    AgentBookState agent;
    /// Instantaneous cash flow of the impulse: zero for limit and cancel
    /// orders, signed cash paid or received for market orders.
    double instantaneous_profit{0.0};
};

/// Whether applying `p` exposes a fresh second level that must be drawn.
[[nodiscard]] bool impulse_needs_redraw(const BookState& book, const AgentBookState& agent, Impulse p) noexcept;

/// Deterministic intervention with the second-level redraw resolved.
/// Throws InadmissibleImpulse if `p` is not admissible.
[[nodiscard]] ImpulseResult apply_impulse(const BookState& book, const AgentBookState& agent, Impulse p,
                                          std::int64_t redraw);

[[nodiscard]] ImpulseResult apply_impulse(const BookState& book, const AgentBookState& agent, Impulse p, Rng& rng,
                                          const QueueRedrawPolicy& replenish);

struct WeightedImpulseResult {
    double weight{0.0};
    ImpulseResult result;
};

[[nodiscard]] std::vector<WeightedImpulseResult> enumerate_impulse(const BookState& book, const AgentBookState& agent,
                                                                   Impulse p, const QueueRedrawPolicy& replenish);

} // namespace hawkesmm
