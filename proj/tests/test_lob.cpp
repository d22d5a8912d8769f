#include "hawkesmm/lob.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace hawkesmm;

namespace {

BookState make_book(std::int64_t ask, std::int64_t bid, std::int64_t qa, std::int64_t qaD, std::int64_t qb,
                    std::int64_t qbD) {
    BookState b;
    b.ask_ticks = ask;
    b.bid_ticks = bid;
    b.q_ask = qa;
    b.q_ask_deep = qaD;
    b.q_bid = qb;
    b.q_bid_deep = qbD;
    return b;
}

struct RandomState {
    BookState book;
    AgentBookState agent;
};

RandomState random_state(Rng& rng) {
    RandomState s;
    s.book.bid_ticks = 19990 + static_cast<std::int64_t>(uniform01(rng) * 20);
    s.book.ask_ticks = s.book.bid_ticks + 1 + static_cast<std::int64_t>(uniform01(rng) * 3);
    s.book.q_ask = 1 + static_cast<std::int64_t>(uniform01(rng) * 4);
    s.book.q_bid = 1 + static_cast<std::int64_t>(uniform01(rng) * 4);
    s.book.q_ask_deep = 1 + static_cast<std::int64_t>(uniform01(rng) * 4);
    s.book.q_bid_deep = 1 + static_cast<std::int64_t>(uniform01(rng) * 4);
    s.agent.cash = 2000.0;
    s.agent.inventory = static_cast<std::int64_t>(uniform01(rng) * 7) - 3;
    for (Side side : {Side::Ask, Side::Bid}) {
        if (bernoulli(rng, 0.7)) {
            const std::int64_t total = s.book.top(side) + s.book.deep(side);
            s.agent.priority(side) = static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(total));
        }
    }
    return s;
}

} // namespace

TEST_CASE("market order depleting a single-unit top promotes the second level") {
    const BookState b = make_book(20002, 20000, 1, 3, 2, 2);
    Rng rng(1);
    const Transition t = apply_event(b, AgentBookState{}, EventType::MO_ask, rng, QueueRedrawPolicy{});
    CHECK(t.book.ask_ticks == 20003);
    CHECK(t.book.p_ask() == doctest::Approx(200.03));
    CHECK(t.book.q_ask == 3);
    CHECK(t.book.q_ask_deep >= 1);
    CHECK(t.book.p_mid() == doctest::Approx(200.015));
    CHECK_FALSE(t.fill);
}

TEST_CASE("top limit order only grows the top queue") {
    Rng rng(2);
    for (int k = 0; k < 100; ++k) {
        const RandomState s = random_state(rng);
        const Transition t = apply_event(s.book, s.agent, EventType::LO_bid_T, EventOutcome{});
        BookState expected = s.book;
        expected.q_bid += 1;
        CHECK(t.book == expected);
        CHECK(t.agent == s.agent);
    }
}

TEST_CASE("agent at the front is filled by a market order") {
    const BookState b = make_book(20002, 20000, 3, 2, 2, 2);
    AgentBookState a;
    a.cash = 2000.0;
    a.n_ask = 0;
    const Transition t = apply_event(b, a, EventType::MO_ask, EventOutcome{});
    REQUIRE(t.fill);
    CHECK(t.fill->side == Side::Ask);
    CHECK(t.fill->price == doctest::Approx(200.02));
    CHECK(t.agent.inventory == -1);
    CHECK(t.agent.cash == doctest::Approx(2200.02));
    CHECK_FALSE(t.agent.n_ask);
    CHECK(t.book.q_ask == 2);
}

TEST_CASE("bid-side fill buys at the bid") {
    const BookState b = make_book(20002, 20000, 3, 2, 2, 2);
    AgentBookState a;
    a.cash = 2000.0;
    a.n_bid = 0;
    const Transition t = apply_event(b, a, EventType::MO_bid, EventOutcome{});
    REQUIRE(t.fill);
    CHECK(t.agent.inventory == 1);
    CHECK(t.agent.cash == doctest::Approx(1800.0));
}

TEST_CASE("in-spread limit order creates a new best level") {
    const BookState b = make_book(20003, 20000, 4, 2, 2, 2);
    const double mid0 = b.p_mid();
    const Transition t = apply_event(b, AgentBookState{}, EventType::LO_ask_IS, EventOutcome{});
    CHECK(t.book.p_ask() == doctest::Approx(200.02));
    CHECK(t.book.q_ask == 1);
    CHECK(t.book.q_ask_deep == 4);
    CHECK(t.book.p_mid() == doctest::Approx(mid0 - 0.005));
}

TEST_CASE("in-spread limit order pushes the resting agent back one place") {
    const BookState b = make_book(20003, 20000, 4, 2, 2, 2);
    AgentBookState a;
    a.n_ask = 1;
    const Transition t = apply_event(b, a, EventType::LO_ask_IS, EventOutcome{});
    REQUIRE(t.agent.n_ask);
    CHECK(*t.agent.n_ask == 2);
    CHECK(t.book.q_ask + t.book.q_ask_deep > *t.agent.n_ask);
}

TEST_CASE("in-spread limit order is a no-op at a one-tick spread") {
    const BookState b = make_book(20001, 20000, 4, 2, 2, 2);
    const Transition t = apply_event(b, AgentBookState{}, EventType::LO_bid_IS, EventOutcome{});
    CHECK(t.book == b);
}

TEST_CASE("cancel ahead of the agent uses probability n / q") {
    const BookState b = make_book(20002, 20000, 4, 2, 2, 2);
    AgentBookState a;
    a.n_ask = 2;
    const EventRandomness r = event_randomness(b, a, EventType::CO_ask_T);
    CHECK(r.cancel_ahead_probability == doctest::Approx(0.5));

    const auto outcomes = enumerate_event(b, a, EventType::CO_ask_T, QueueRedrawPolicy{});
    double total = 0.0;
    double expected_n = 0.0;
    for (const auto& w : outcomes) {
        total += w.weight;
        expected_n += w.weight * static_cast<double>(*w.transition.agent.n_ask);
        CHECK(w.transition.book.q_ask == 3);
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(expected_n == doctest::Approx(2.0 - 0.5));
}

TEST_CASE("deep cancel uses probability (n - q) / q_D for a deep-resting agent") {
    const BookState b = make_book(20002, 20000, 2, 4, 2, 2);
    AgentBookState a;
    a.n_ask = 4;
    const EventRandomness r = event_randomness(b, a, EventType::CO_ask_D);
    CHECK(r.cancel_ahead_probability == doctest::Approx(0.5));
}

TEST_CASE("a cancel at the agent's level hits an order ahead when the agent is last") {
    const BookState b = make_book(20002, 20000, 4, 3, 2, 2);
    AgentBookState top;
    top.n_ask = 3;
    CHECK(event_randomness(b, top, EventType::CO_ask_T).cancel_ahead_probability == 1.0);
    AgentBookState deep;
    deep.n_ask = 6;
    CHECK(event_randomness(b, deep, EventType::CO_ask_D).cancel_ahead_probability == 1.0);
}

TEST_CASE("sampled cancels match the cancel-ahead probability") {
    const BookState b = make_book(20002, 20000, 4, 2, 2, 2);
    AgentBookState a;
    a.n_ask = 2;
    Rng rng(17);
    int ahead = 0;
    const int trials = 40000;
    for (int k = 0; k < trials; ++k) {
        const Transition t = apply_event(b, a, EventType::CO_ask_T, rng, QueueRedrawPolicy{});
        ahead += *t.agent.n_ask == 1 ? 1 : 0;
    }
    const double p = static_cast<double>(ahead) / trials;
    CHECK(std::abs(p - 0.5) < 4.0 * std::sqrt(0.5 * 0.5 / trials));
}

TEST_CASE("queue redraw distribution") {
    const QueueRedrawPolicy policy{0.4};
    CHECK(policy.probability(1) == doctest::Approx(0.4));
    CHECK(policy.probability(3) == doctest::Approx(0.4 * 0.36));
    double total = 0.0;
    for (const auto& [k, w] : policy.support()) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng(4);
    double sum = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) sum += static_cast<double>(policy.draw(rng));
    // E[1 + Geometric failures] = 1 / p.
    CHECK(sum / n == doctest::Approx(2.5).epsilon(0.02));
}

TEST_CASE("mark to market") {
    BookState b = make_book(20001, 19999, 1, 1, 1, 1);
    AgentBookState a;
    a.cash = 2000.0;
    CHECK(mark_to_market(b, a) == 2000.0);
    a.cash = 1800.0;
    a.inventory = 1;
    CHECK(mark_to_market(b, a) == doctest::Approx(2000.0));
}

TEST_CASE("property: every event preserves book and priority invariants") {
    Rng rng(2024);
    const QueueRedrawPolicy policy{};
    for (int k = 0; k < 50000; ++k) {
        RandomState s = random_state(rng);
        const auto e = event_from_index(static_cast<std::size_t>(uniform01(rng) * kNumEventTypes));
        const Transition t = apply_event(s.book, s.agent, e, rng, policy);
        REQUIRE_NOTHROW(t.book.validate());
        REQUIRE_NOTHROW(validate(t.book, t.agent));
        CHECK(t.book.ask_ticks > t.book.bid_ticks);
        CHECK(t.book.p_mid() == doctest::Approx(0.5 * (t.book.p_ask() + t.book.p_bid())).epsilon(1e-15));
        if (!t.fill) {
            CHECK(t.agent.cash == s.agent.cash);
            CHECK(t.agent.inventory == s.agent.inventory);
        } else {
            const double px = t.fill->side == Side::Ask ? s.book.p_ask() : s.book.p_bid();
            CHECK(t.fill->price == px);
            CHECK(s.agent.priority(t.fill->side) == std::optional<std::int64_t>(0));
        }
    }
}

TEST_CASE("property: enumerated outcomes are a probability distribution over valid states") {
    Rng rng(5);
    const QueueRedrawPolicy policy{};
    for (int k = 0; k < 2000; ++k) {
        RandomState s = random_state(rng);
        for (std::size_t i = 0; i < kNumEventTypes; ++i) {
            const auto outcomes = enumerate_event(s.book, s.agent, event_from_index(i), policy);
            double total = 0.0;
            for (const auto& w : outcomes) {
                CHECK(w.weight >= 0.0);
                total += w.weight;
                REQUIRE_NOTHROW(validate(w.transition.book, w.transition.agent));
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("replay with the same seed is bit-reproducible") {
    auto run = [] {
        Rng rng(77);
        RandomState s = random_state(rng);
        for (int k = 0; k < 5000; ++k) {
            const auto e = event_from_index(static_cast<std::size_t>(uniform01(rng) * kNumEventTypes));
            Transition t = apply_event(s.book, s.agent, e, rng, QueueRedrawPolicy{});
            s.book = t.book;
            s.agent = t.agent;
            if (!s.agent.n_ask && bernoulli(rng, 0.1)) s.agent.n_ask = s.book.q_ask - 1;
        }
        return s;
    };
    const RandomState a = run();
    const RandomState b = run();
    CHECK(a.book == b.book);
    CHECK(a.agent == b.agent);
}

TEST_CASE("accounting identity over simulated fill sequences") {
    Rng rng(31);
    RandomState s = random_state(rng);
    const double initial = mark_to_market(s.book, s.agent);
    double cumulative = 0.0;
    for (int k = 0; k < 20000; ++k) {
        for (Side side : {Side::Ask, Side::Bid}) {
            if (!s.agent.resting(side) && bernoulli(rng, 0.2)) s.agent.priority(side) = 0;
        }
        const auto e = event_from_index(static_cast<std::size_t>(uniform01(rng) * kNumEventTypes));
        const Transition t = apply_event(s.book, s.agent, e, rng, QueueRedrawPolicy{});
        cumulative += (t.agent.cash - s.agent.cash) +
                      (static_cast<double>(t.agent.inventory) * t.book.p_mid() -
                       static_cast<double>(s.agent.inventory) * s.book.p_mid());
        s.book = t.book;
        s.agent = t.agent;
    }
    CHECK(std::abs(initial + cumulative - mark_to_market(s.book, s.agent)) < 1e-9 * std::max(1.0, std::abs(initial)));
}

TEST_CASE("initial state sampling") {
    const InitialStateConfig cfg{};
    Rng rng(9);
    double mid_sum = 0.0;
    double spread_sum = 0.0;
    double inv_sq = 0.0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        const BookState b = sample_initial_book(cfg, QueueRedrawPolicy{}, rng);
        REQUIRE_NOTHROW(b.validate());
        mid_sum += b.p_mid();
        spread_sum += static_cast<double>(b.spread_ticks());
        const auto y = sample_initial_inventory(cfg, rng);
        inv_sq += static_cast<double>(y * y);
    }
    CHECK(mid_sum / n == doctest::Approx(200.0).epsilon(0.005));
    // 1 + Geometric(0.8) failures has mean 1 / 0.8.
    CHECK(spread_sum / n == doctest::Approx(1.25).epsilon(0.02));
    // Rounded N(0, 4) has second moment 4 + 1/12.
    CHECK(inv_sq / n == doctest::Approx(4.0 + 1.0 / 12.0).epsilon(0.05));
}

TEST_CASE("event type names and mirror order") {
    CHECK(parse_event_type("CO_bid_D") == EventType::CO_bid_D);
    CHECK_FALSE(parse_event_type("bogus"));
    for (std::size_t i = 0; i < kNumEventTypes; ++i) {
        const EventType e = event_from_index(i);
        const EventType m = event_from_index(mirror_index(i));
        CHECK(event_action(e) == event_action(m));
        CHECK(event_side(e) == opposite(event_side(m)));
    }
    CHECK_THROWS_AS((void)event_from_index(12), ContractViolation);
}
