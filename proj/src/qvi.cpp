#include "hawkesmm/qvi.hpp"

#include "hawkesmm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace hawkesmm {

namespace {

double step_for(double x, double h) { return h * std::max(1.0, std::abs(x)); }

void require_exponential(const KernelParams& kernel) {
    if (kernel.kind != KernelKind::Exponential) {
        throw std::invalid_argument("generator: only exponential kernels have a finite-dimensional drift");
    }
    kernel.validate();
}

// E[Phi(t, lambda_next, T_i(s))] over the outcomes of event i.
template <class F>
double expected_after_event(const F& eval, std::size_t i, std::size_t dim, const BookState& book,
                            const AgentBookState& agent, const QueueRedrawPolicy& replenish) {
    if (dim != kNumEventTypes) {
        return eval(book, agent);
    }
    double acc = 0.0;
    for (const auto& w : enumerate_event(book, agent, event_from_index(i), replenish)) {
        acc += w.weight * eval(w.transition.book, w.transition.agent);
    }
    return acc;
}

} // namespace

double generator(const CandidateFunction& phi, double t, std::span<const double> lambda, const BookState& book,
                 const AgentBookState& agent, const KernelParams& kernel, const QviConfig& config) {
    require_exponential(kernel);
    if (!kernel.has_row_constant_decay()) {
        throw std::invalid_argument("generator: decay varies within a row; use generator_full");
    }
    const std::size_t m = kernel.dim();
    if (lambda.size() != m) {
        throw std::invalid_argument("generator: lambda has the wrong dimension");
    }
    const double base = phi(t, lambda, book, agent);

    const double ht = step_for(t, config.fd_step);
    double out = (phi(t + ht, lambda, book, agent) - phi(t - ht, lambda, book, agent)) / (2.0 * ht);

    std::vector<double> lam(lambda.begin(), lambda.end());
    for (std::size_t i = 0; i < m; ++i) {
        const double hl = step_for(lambda[i], config.fd_step);
        lam[i] = lambda[i] + hl;
        const double up = phi(t, lam, book, agent);
        lam[i] = lambda[i] - hl;
        const double down = phi(t, lam, book, agent);
        lam[i] = lambda[i];
        const double g = kernel.gamma[i * m];
        out += (up - down) / (2.0 * hl) * g * (kernel.mu[i] - lambda[i]);
    }

    std::vector<double> jumped(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (lambda[i] == 0.0) continue;
        for (std::size_t k = 0; k < m; ++k) jumped[k] = lambda[k] + kernel.alpha[k * m + i];
        const double after = expected_after_event(
            [&](const BookState& b, const AgentBookState& a) { return phi(t, jumped, b, a); }, i, m, book, agent,
            config.replenish);
        out += lambda[i] * (after - base);
    }
    return out;
}

double generator_full(const ExcitationCandidate& phi, double t, std::span<const double> excitation,
                      const BookState& book, const AgentBookState& agent, const KernelParams& kernel,
                      const QviConfig& config) {
    require_exponential(kernel);
    const std::size_t m = kernel.dim();
    if (excitation.size() != m * m) {
        throw std::invalid_argument("generator_full: excitation must be M x M");
    }
    const double base = phi(t, excitation, book, agent);

    const double ht = step_for(t, config.fd_step);
    double out = (phi(t + ht, excitation, book, agent) - phi(t - ht, excitation, book, agent)) / (2.0 * ht);

    std::vector<double> e(excitation.begin(), excitation.end());
    for (std::size_t k = 0; k < m * m; ++k) {
        const double drift = -kernel.gamma[k] * excitation[k];
        if (drift == 0.0) continue;
        const double h = step_for(excitation[k], config.fd_step);
        e[k] = excitation[k] + h;
        const double up = phi(t, e, book, agent);
        e[k] = excitation[k] - h;
        const double down = phi(t, e, book, agent);
        e[k] = excitation[k];
        out += (up - down) / (2.0 * h) * drift;
    }

    for (std::size_t i = 0; i < m; ++i) {
        double lam = kernel.mu[i];
        for (std::size_t j = 0; j < m; ++j) lam += excitation[i * m + j];
        if (lam == 0.0) continue;
        std::vector<double> jumped(excitation.begin(), excitation.end());
        for (std::size_t k = 0; k < m; ++k) jumped[k * m + i] += kernel.alpha[k * m + i];
        const double after = expected_after_event(
            [&](const BookState& b, const AgentBookState& a) { return phi(t, jumped, b, a); }, i, m, book, agent,
            config.replenish);
        out += lam * (after - base);
    }
    return out;
}

double impulse_value(const CandidateFunction& phi, double t, std::span<const double> lambda, const BookState& book,
                     const AgentBookState& agent, Impulse p, const QviConfig& config) {
    if (!admissible(book, agent, p)) {
        throw InadmissibleImpulse("impulse_value: impulse is not admissible");
    }
    double acc = 0.0;
    for (const auto& w : enumerate_impulse(book, agent, p, config.replenish)) {
        AgentBookState a = w.result.agent;
        a.cash = agent.cash;
        acc += w.weight * (phi(t, lambda, w.result.book, a) + w.result.instantaneous_profit);
    }
    return acc;
}

InterventionValue intervention_value(const CandidateFunction& phi, double t, std::span<const double> lambda,
                                     const BookState& book, const AgentBookState& agent, const QviConfig& config) {
    const auto mask = admissible_mask(book, agent, config.action_set);
    std::optional<InterventionValue> best;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        const Impulse p = impulse_from_index(i);
        const double v = impulse_value(phi, t, lambda, book, agent, p, config);
        if (!best || v > best->best) best = InterventionValue{v, p};
    }
    if (!best) {
        throw NoAdmissibleImpulse("intervention_value: no admissible impulse");
    }
    return *best;
}

double qvi_residual(const CandidateFunction& phi, double t, std::span<const double> lambda, const BookState& book,
                    const AgentBookState& agent, const KernelParams& kernel, const QviConfig& config) {
    const double y = static_cast<double>(agent.inventory);
    const double f = -config.eta * y * y;
    const double continuation = -generator(phi, t, lambda, book, agent, kernel, config) - f;
    const double intervention = phi(t, lambda, book, agent) - intervention_value(phi, t, lambda, book, agent, config).best;
    return std::min(continuation, intervention);
}

double boundary_residual(const CandidateFunction& phi, double horizon, std::span<const double> lambda,
                         const BookState& book, const AgentBookState& agent, const QviConfig& config) {
    const double y = static_cast<double>(agent.inventory);
    const double payoff = mark_to_market(book, agent) - config.kappa * y * y;
    const double d = phi(horizon, lambda, book, agent) - payoff;
    return d * d;
}

MomentPath moment_reference(const KernelParams& kernel, double t_end, std::size_t steps) {
    require_exponential(kernel);
    if (!kernel.has_row_constant_decay()) {
        throw std::invalid_argument("moment_reference: decay must be row-constant");
    }
    if (!(t_end >= 0.0) || steps == 0) {
        throw std::invalid_argument("moment_reference: need t_end >= 0 and steps > 0");
    }
    const std::size_t m = kernel.dim();
    // State: m means of lambda followed by m means of N.
    auto rhs = [&](const std::vector<double>& s) {
        std::vector<double> d(2 * m);
        for (std::size_t i = 0; i < m; ++i) {
            double v = kernel.gamma[i * m] * (kernel.mu[i] - s[i]);
            for (std::size_t j = 0; j < m; ++j) v += kernel.alpha[i * m + j] * s[j];
            d[i] = v;
            d[m + i] = s[i];
        }
        return d;
    };
    std::vector<double> s(2 * m, 0.0);
    std::copy(kernel.mu.begin(), kernel.mu.end(), s.begin());
    const double h = t_end / static_cast<double>(steps);
    std::vector<double> tmp(2 * m);
    for (std::size_t n = 0; n < steps; ++n) {
        const auto k1 = rhs(s);
        for (std::size_t k = 0; k < 2 * m; ++k) tmp[k] = s[k] + 0.5 * h * k1[k];
        const auto k2 = rhs(tmp);
        for (std::size_t k = 0; k < 2 * m; ++k) tmp[k] = s[k] + 0.5 * h * k2[k];
        const auto k3 = rhs(tmp);
        for (std::size_t k = 0; k < 2 * m; ++k) tmp[k] = s[k] + h * k3[k];
        const auto k4 = rhs(tmp);
        for (std::size_t k = 0; k < 2 * m; ++k) s[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    }
    MomentPath out;
    out.intensity.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(m));
    out.count.assign(s.begin() + static_cast<std::ptrdiff_t>(m), s.end());
    return out;
}

DynkinResult dynkin_check(DynkinFunction fn, std::size_t component, const KernelParams& kernel, double t_end,
                          std::size_t n_paths, std::uint64_t seed) {
    if (component >= kernel.dim()) {
        throw std::invalid_argument("dynkin_check: component out of range");
    }
    if (n_paths < 2) {
        throw std::invalid_argument("dynkin_check: need at least two paths");
    }
    const auto ref = moment_reference(kernel, t_end);
    std::vector<double> values;
    values.reserve(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
        Rng rng(derive_seed(seed, p));
        // Only cumulative counts and the intensity are read; keep the event log minimal.
        HawkesClock clock(kernel, std::numeric_limits<double>::min());
        while (auto ev = clock.sample_next_event(rng, t_end)) {
            clock.apply_event(ev->type, ev->time);
        }
        clock.advance_to(t_end);
        values.push_back(fn == DynkinFunction::Intensity ? clock.intensity(component)
                                                         : static_cast<double>(clock.counts()[component]));
    }
    DynkinResult r;
    r.estimate = stats::mean(values);
    r.se = stats::stddev(values) / std::sqrt(static_cast<double>(n_paths));
    r.reference = fn == DynkinFunction::Intensity ? ref.intensity[component] : ref.count[component];
    r.z = r.se > 0.0 ? (r.estimate - r.reference) / r.se : (r.estimate == r.reference ? 0.0 : INFINITY);
    return r;
}

QviSample sample_qvi_state(const KernelParams& kernel, double horizon, const InitialStateConfig& init,
                           const QueueRedrawPolicy& replenish, Rng& rng) {
    QviSample s;
    s.t = horizon * uniform01(rng);
    s.lambda.resize(kernel.dim());
    for (std::size_t i = 0; i < kernel.dim(); ++i) {
        s.lambda[i] = kernel.mu[i] * (1.0 + exponential(rng, 1.0));
    }
    s.book = sample_initial_book(init, replenish, rng);
    s.agent.inventory = sample_initial_inventory(init, rng);
    for (Side side : {Side::Ask, Side::Bid}) {
        if (bernoulli(rng, 0.5)) {
            const auto q = s.book.top(side);
            s.agent.priority(side) = std::min<std::int64_t>(q - 1, static_cast<std::int64_t>(uniform01(rng) * q));
        }
    }
    return s;
}

} // namespace hawkesmm
