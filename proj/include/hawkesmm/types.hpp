#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hawkesmm {

/// Thrown when a caller breaks an operation's precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class Side : std::uint8_t { Ask = 0, Bid = 1 };

[[nodiscard]] constexpr Side opposite(Side s) noexcept {
    return s == Side::Ask ? Side::Bid : Side::Ask;
}

[[nodiscard]] constexpr std::string_view side_name(Side s) noexcept {
    return s == Side::Ask ? "ask" : "bid";
}

// Canonical ordering for intensity vectors, kernel matrices and history
// features. Ask block first, then the bid block; the in-spread and deep limit
// orders swap places in the bid block.
enum class EventType : std::uint8_t {
    LO_ask_D = 0,
    LO_ask_T,
    CO_ask_T,
    CO_ask_D,
    MO_ask,
    LO_ask_IS,
    LO_bid_IS,
    LO_bid_T,
    CO_bid_T,
    CO_bid_D,
    MO_bid,
    LO_bid_D,
};

inline constexpr std::size_t kNumEventTypes = 12;

inline constexpr std::array<std::string_view, kNumEventTypes> kEventTypeNames{
    "LO_ask_D", "LO_ask_T", "CO_ask_T", "CO_ask_D", "MO_ask",  "LO_ask_IS",
    "LO_bid_IS", "LO_bid_T", "CO_bid_T", "CO_bid_D", "MO_bid", "LO_bid_D",
};

[[nodiscard]] constexpr std::size_t index_of(EventType e) noexcept {
    return static_cast<std::size_t>(e);
}

[[nodiscard]] inline EventType event_from_index(std::size_t i) {
    if (i >= kNumEventTypes) {
        throw ContractViolation("event type index out of range: " + std::to_string(i));
    }
    return static_cast<EventType>(i);
}

[[nodiscard]] constexpr std::string_view event_name(EventType e) noexcept {
    return kEventTypeNames[index_of(e)];
}

[[nodiscard]] std::optional<EventType> parse_event_type(std::string_view name);

/// What an exogenous event does, independent of side.
enum class EventAction : std::uint8_t { LimitTop, LimitDeep, LimitInSpread, CancelTop, CancelDeep, Market };

[[nodiscard]] constexpr Side event_side(EventType e) noexcept {
    return index_of(e) < 6 ? Side::Ask : Side::Bid;
}

[[nodiscard]] constexpr EventAction event_action(EventType e) noexcept {
    switch (e) {
    case EventType::LO_ask_D:
    case EventType::LO_bid_D: return EventAction::LimitDeep;
    case EventType::LO_ask_T:
    case EventType::LO_bid_T: return EventAction::LimitTop;
    case EventType::CO_ask_T:
    case EventType::CO_bid_T: return EventAction::CancelTop;
    case EventType::CO_ask_D:
    case EventType::CO_bid_D: return EventAction::CancelDeep;
    case EventType::MO_ask:
    case EventType::MO_bid: return EventAction::Market;
    case EventType::LO_ask_IS:
    case EventType::LO_bid_IS: return EventAction::LimitInSpread;
    }
    return EventAction::LimitTop;
}

/// Index of the same event on the other side of the book.
[[nodiscard]] constexpr std::size_t mirror_index(std::size_t i) noexcept {
    constexpr std::array<std::size_t, kNumEventTypes> table{11, 7, 8, 9, 10, 6, 5, 1, 2, 3, 4, 0};
    return table[i];
}

} // namespace hawkesmm
