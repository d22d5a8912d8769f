#pragma once

#include "hawkesmm/hawkes.hpp"
#include "hawkesmm/intervention.hpp"
#include "hawkesmm/lob.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>

namespace hawkesmm {

/// Candidate value function Phi(t, lambda, s) over the reduced state
/// s = (X, Y, prices, queue sizes, priorities).
using CandidateFunction =
    std::function<double(double t, std::span<const double> lambda, const BookState&, const AgentBookState&)>;

/// Candidate over the full exponential excitation state: `excitation` is the
/// row-major M x M matrix e_ij with lambda_i = mu_i + sum_j e_ij.
using ExcitationCandidate =
    std::function<double(double t, std::span<const double> excitation, const BookState&, const AgentBookState&)>;

struct QviConfig {
    /// Relative finite-difference step: h * max(1, |x|).
    double fd_step{1e-4};
    double eta{10.0};
    double kappa{0.1};
    ActionSet action_set{ActionSet::Restricted};
    QueueRedrawPolicy replenish{};
};

class NoAdmissibleImpulse : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// d/dt Phi + sum_i [lambda_i (E Phi(t, lambda + alpha_{.i}, T_i(s)) - Phi) + d Phi/d lambda_i * gamma_i (mu_i - lambda_i)].
/// T_i is taken in expectation over its random outcomes; for dimensions other
/// than the 12 book event types the book state is left unchanged.
/// Requires an exponential kernel with row-constant decay.
[[nodiscard]] double generator(const CandidateFunction& phi, double t, std::span<const double> lambda,
                               const BookState& book, const AgentBookState& agent, const KernelParams& kernel,
                               const QviConfig& config = {});

/// Generator over the excitation matrix, valid for any exponential kernel:
/// drift -gamma_ij e_ij on each of the M^2 entries, jumps e_{.i} += alpha_{.i}.
[[nodiscard]] double generator_full(const ExcitationCandidate& phi, double t, std::span<const double> excitation,
                                    const BookState& book, const AgentBookState& agent, const KernelParams& kernel,
                                    const QviConfig& config = {});

struct InterventionValue {
    double best{0.0};
    Impulse argmax{Impulse::LO_T_ask};
};

/// Phi(Gamma(s, p)) + K(s, p) for one admissible impulse, in expectation over
/// the impulse's random outcomes. The market-order cash flow is carried by K,
/// so Phi sees the pre-impulse cash.
[[nodiscard]] double impulse_value(const CandidateFunction& phi, double t, std::span<const double> lambda,
                                   const BookState& book, const AgentBookState& agent, Impulse p,
                                   const QviConfig& config = {});

/// Maximum of impulse_value over admissible impulses of the configured set;
/// ties go to the lowest impulse index. Throws NoAdmissibleImpulse when the set is empty.
[[nodiscard]] InterventionValue intervention_value(const CandidateFunction& phi, double t,
                                                   std::span<const double> lambda, const BookState& book,
                                                   const AgentBookState& agent, const QviConfig& config = {});

/// min{ -L Phi - f, Phi - M Phi } with running cost f = -eta Y^2 (L includes d/dt).
[[nodiscard]] double qvi_residual(const CandidateFunction& phi, double t, std::span<const double> lambda,
                                  const BookState& book, const AgentBookState& agent, const KernelParams& kernel,
                                  const QviConfig& config = {});

/// |Phi(T, s) - (X + Y p_mid - kappa Y^2)|^2.
[[nodiscard]] double boundary_residual(const CandidateFunction& phi, double horizon, std::span<const double> lambda,
                                       const BookState& book, const AgentBookState& agent,
                                       const QviConfig& config = {});

enum class DynkinFunction {
    /// Phi = lambda_k(t).
    Intensity,
    /// Phi = N_k(t), the number of type-k events in (0, t].
    Count,
};

struct DynkinResult {
    double estimate{0.0};
    double reference{0.0};
    double se{0.0};
    double z{0.0};
};

/// Means of lambda(t) and N(t) from the moment ODE
///   m' = diag(gamma) (mu - m) + alpha m,  n' = m,  m(0) = mu, n(0) = 0,
/// integrated with classical RK4.
struct MomentPath {
    std::vector<double> intensity;
    std::vector<double> count;
};
[[nodiscard]] MomentPath moment_reference(const KernelParams& kernel, double t_end, std::size_t steps = 4000);

/// Monte-Carlo estimate of E[Phi(t_end)] from an empty history, compared with
/// the moment ODE. Paths use seeds derived from `seed` and the path index.
[[nodiscard]] DynkinResult dynkin_check(DynkinFunction fn, std::size_t component, const KernelParams& kernel,
                                        double t_end, std::size_t n_paths, std::uint64_t seed);

/// Random reduced state for residual diagnostics: a sampled initial book and
/// inventory, cash 0, each side resting with probability 1/2 at a uniform
/// priority within the top level, and lambda_i = mu_i (1 + Exp(1)).
struct QviSample {
    double t{0.0};
    std::vector<double> lambda;
    BookState book;
    AgentBookState agent;
};
[[nodiscard]] QviSample sample_qvi_state(const KernelParams& kernel, double horizon, const InitialStateConfig& init,
                                         const QueueRedrawPolicy& replenish, Rng& rng);

} // namespace hawkesmm
