#pragma once

#include "hawkesmm/random.hpp"
#include "hawkesmm/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hawkesmm {

/// Two-level book: best price and queue size on each side plus the size of
/// the next level. Prices are held in integer ticks so that the spread is
/// always an exact multiple of the tick size.
struct BookState {
    std::int64_t ask_ticks{20001};
    std::int64_t bid_ticks{20000};
    std::int64_t q_ask{1};
    std::int64_t q_bid{1};
    std::int64_t q_ask_deep{1};
    std::int64_t q_bid_deep{1};
    double tick{0.01};

    [[nodiscard]] double p_ask() const noexcept { return static_cast<double>(ask_ticks) * tick; }
    [[nodiscard]] double p_bid() const noexcept { return static_cast<double>(bid_ticks) * tick; }
    [[nodiscard]] double p_mid() const noexcept {
        return 0.5 * static_cast<double>(ask_ticks + bid_ticks) * tick;
    }
    [[nodiscard]] std::int64_t spread_ticks() const noexcept { return ask_ticks - bid_ticks; }
    [[nodiscard]] double spread() const noexcept { return static_cast<double>(spread_ticks()) * tick; }

    [[nodiscard]] std::int64_t& price_ticks(Side s) noexcept { return s == Side::Ask ? ask_ticks : bid_ticks; }
    [[nodiscard]] std::int64_t price_ticks(Side s) const noexcept { return s == Side::Ask ? ask_ticks : bid_ticks; }
    [[nodiscard]] double price(Side s) const noexcept { return static_cast<double>(price_ticks(s)) * tick; }
    [[nodiscard]] std::int64_t& top(Side s) noexcept { return s == Side::Ask ? q_ask : q_bid; }
    [[nodiscard]] std::int64_t top(Side s) const noexcept { return s == Side::Ask ? q_ask : q_bid; }
    [[nodiscard]] std::int64_t& deep(Side s) noexcept { return s == Side::Ask ? q_ask_deep : q_bid_deep; }
    [[nodiscard]] std::int64_t deep(Side s) const noexcept { return s == Side::Ask ? q_ask_deep : q_bid_deep; }

    /// Throws ContractViolation if a structural invariant is broken.
    void validate() const;

    friend bool operator==(const BookState&, const BookState&) = default;
};

/// The market maker's cash, inventory and queue priority per side.
/// Priority is the number of resting orders ahead of the agent's order
/// (counting through the top level into the second level); nullopt means the
/// agent has no resting order on that side.
struct AgentBookState {
    double cash{0.0};
    std::int64_t inventory{0};
    std::optional<std::int64_t> n_ask;
    std::optional<std::int64_t> n_bid;

    [[nodiscard]] std::optional<std::int64_t>& priority(Side s) noexcept { return s == Side::Ask ? n_ask : n_bid; }
    [[nodiscard]] const std::optional<std::int64_t>& priority(Side s) const noexcept {
        return s == Side::Ask ? n_ask : n_bid;
    }
    [[nodiscard]] bool resting(Side s) const noexcept { return priority(s).has_value(); }

    friend bool operator==(const AgentBookState&, const AgentBookState&) = default;
};

/// Checks the agent/book coupling invariants (0 <= n < q + q_D).
void validate(const BookState& book, const AgentBookState& agent);

[[nodiscard]] bool agent_in_top(const BookState& book, const AgentBookState& agent, Side s) noexcept;

/// Size of a freshly exposed second level: 1 + Geometric(p) failures.
struct QueueRedrawPolicy {
    double p{0.4};

    [[nodiscard]] std::int64_t draw(Rng& rng) const { return 1 + geometric_failures(rng, p); }
    /// P(size == k), k >= 1.
    [[nodiscard]] double probability(std::int64_t k) const;
    /// Support points and weights, truncated once the tail mass drops below
    /// `tail`; the residual tail mass is folded into the last point.
    [[nodiscard]] std::vector<std::pair<std::int64_t, double>> support(double tail = 1e-12) const;
};

struct Fill {
    Side side{Side::Ask};
    double price{0.0};
};

struct Transition {
    BookState book;
    AgentBookState agent;
    std::optional<Fill> fill;
};

/// Random inputs an exogenous event may need given the current state.
struct EventRandomness {
    /// Probability that a cancel removes an order ahead of the agent
    /// (0 when the agent is not exposed to that cancel).
    double cancel_ahead_probability{0.0};
    /// Whether a new second level has to be drawn.
    bool needs_redraw{false};
};

/// Resolved random inputs for the deterministic transition.
struct EventOutcome {
    bool cancel_ahead{false};
    std::int64_t redraw{1};
};

[[nodiscard]] EventRandomness event_randomness(const BookState& book, const AgentBookState& agent, EventType e);

/// Deterministic transition for a given resolution of the randomness.
[[nodiscard]] Transition apply_event(const BookState& book, const AgentBookState& agent, EventType e,
                                     const EventOutcome& outcome);

/// Sampling transition: draws what the event needs from `rng`.
[[nodiscard]] Transition apply_event(const BookState& book, const AgentBookState& agent, EventType e, Rng& rng,
                                     const QueueRedrawPolicy& replenish);

struct WeightedTransition {
    double weight{0.0};
    Transition transition;
};

/// Every outcome of an event with its probability (weights sum to 1).
[[nodiscard]] std::vector<WeightedTransition> enumerate_event(const BookState& book, const AgentBookState& agent,
                                                              EventType e, const QueueRedrawPolicy& replenish);

/// X + Y * p_mid.
[[nodiscard]] double mark_to_market(const BookState& book, const AgentBookState& agent) noexcept;

/// Initial-state sampling distributions.
struct InitialStateConfig {
    double mid_mean{200.0};
    double mid_variance{100.0};
    /// Spread in ticks is 1 + Geometric(p) failures.
    double spread_geometric_p{0.8};
    double inventory_variance{4.0};
    double tick{0.01};
};

/// Samples a book with both levels drawn from `replenish`.
[[nodiscard]] BookState sample_initial_book(const InitialStateConfig& cfg, const QueueRedrawPolicy& replenish, Rng& rng);

/// Normal(0, inventory_variance) rounded to the nearest integer.
[[nodiscard]] std::int64_t sample_initial_inventory(const InitialStateConfig& cfg, Rng& rng);

// Internal building blocks shared with the intervention module.
namespace detail {
/// Tick direction that narrows the spread on side s (ask: -1, bid: +1).
[[nodiscard]] constexpr std::int64_t toward_spread(Side s) noexcept { return s == Side::Ask ? -1 : 1; }
/// Removes one order from the top of side s, promoting the second level if it empties.
void consume_top(BookState& book, Side s, std::int64_t redraw);
/// Removes one order from the second level of side s, exposing a fresh level if it empties.
void consume_deep(BookState& book, Side s, std::int64_t redraw);
} // namespace detail

} // namespace hawkesmm
