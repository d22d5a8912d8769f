#pragma once

#include "hawkesmm/random.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace hawkesmm {

enum class KernelKind { Exponential, PowerLaw };

/// Parameters of an M-dimensional mutually exciting Hawkes process.
///
/// Matrices are row-major M x M; entry (i, j) is the effect of a type-j event
/// on the intensity of type i, so that
///   lambda_i(t) = mu_i + sum_j sum_{t_k of type j} phi_ij(t - t_k).
/// Exponential:  phi_ij(t) = alpha_ij * exp(-gamma_ij * t).
/// PowerLaw:     phi_ij(t) = alpha_pl_ij * (1 + t / delta_pl_ij)^(-beta_pl_ij).
struct KernelParams {
    KernelKind kind{KernelKind::Exponential};
    std::vector<double> mu;
    std::vector<double> alpha;
    std::vector<double> gamma;
    std::vector<double> alpha_pl;
    std::vector<double> beta_pl;
    std::vector<double> delta_pl;
    /// Power-law only: events older than this are dropped from the sum.
    double truncation_horizon{60.0};

    [[nodiscard]] std::size_t dim() const noexcept { return mu.size(); }

    [[nodiscard]] double kernel(std::size_t i, std::size_t j, double age) const;
    /// Integral of phi_ij over [0, age].
    [[nodiscard]] double kernel_integral(std::size_t i, std::size_t j, double age) const;
    /// Integral of phi_ij over [0, inf): the branching-matrix entry.
    [[nodiscard]] double branching_entry(std::size_t i, std::size_t j) const;
    [[nodiscard]] std::vector<double> branching_matrix() const;

    /// True when every exponential decay row is constant (gamma_ij == gamma_i),
    /// i.e. lambda itself is Markov and d lambda_i/dt = gamma_i (mu_i - lambda_i).
    [[nodiscard]] bool has_row_constant_decay() const;

    /// Throws std::invalid_argument on shape, sign or stability violations.
    void validate() const;
};

[[nodiscard]] KernelParams make_exponential_kernel(std::vector<double> mu, std::vector<double> alpha,
                                                   std::vector<double> gamma);
[[nodiscard]] KernelParams make_power_law_kernel(std::vector<double> mu, std::vector<double> alpha,
                                                 std::vector<double> beta, std::vector<double> delta,
                                                 double truncation_horizon = 60.0);

/// Spectral radius of a square row-major matrix.
[[nodiscard]] double spectral_radius(std::span<const double> matrix, std::size_t dim);

struct LoggedEvent {
    double time{0.0};
    std::size_t type{0};
};

struct HistoryFeatures {
    std::vector<double> counts;
    double time_since_last{0.0};
};

/// Running state of a Hawkes process: current time, excitation, a bounded
/// event log and cumulative counts.
///
/// Exponential excitation is stored as of the last event time and decayed on
/// demand, so the intensity at a given time does not depend on how many
/// intermediate queries were made. This makes thinning output invariant to
/// how the simulation horizon is partitioned.
class HawkesClock {
public:
    /// `log_horizon` is how long logged events are retained for history
    /// features; power-law kernels additionally retain their truncation horizon.
    explicit HawkesClock(std::shared_ptr<const KernelParams> params, double log_horizon = 1.0,
                         double start_time = 0.0);
    HawkesClock(const KernelParams& params, double log_horizon = 1.0, double start_time = 0.0);

    [[nodiscard]] double now() const noexcept { return now_; }
    [[nodiscard]] std::size_t dim() const noexcept { return params_->dim(); }
    [[nodiscard]] const KernelParams& params() const noexcept { return *params_; }

    [[nodiscard]] double intensity(std::size_t i) const;
    [[nodiscard]] std::vector<double> intensities() const;
    [[nodiscard]] double total_intensity() const;

    /// Excitation matrix (i, j) at `now` for exponential kernels.
    [[nodiscard]] std::vector<double> excitation_state() const;

    /// Cumulative intensity Lambda_i(now) - Lambda_i(start).
    [[nodiscard]] double compensator(std::size_t i) const;

    /// Upper bound on the intensity mass lost to power-law log truncation.
    [[nodiscard]] double truncation_error_bound(std::size_t i) const;

    void apply_event(std::size_t type, double t);
    void advance_to(double t);

    /// Ogata thinning. Returns the next event in (now, t_max] without applying
    /// it (call apply_event with the result), or nullopt after advancing to t_max.
    [[nodiscard]] std::optional<LoggedEvent> sample_next_event(Rng& rng, double t_max);

    /// Per-type counts in [now - window, now] and time since the last event,
    /// capped at `window`.
    [[nodiscard]] HistoryFeatures history_features(double window) const;

    [[nodiscard]] const std::deque<LoggedEvent>& event_log() const noexcept { return log_; }
    [[nodiscard]] std::span<const std::uint64_t> counts() const noexcept { return counts_; }
    [[nodiscard]] std::optional<double> last_event_time() const noexcept { return last_event_; }
    [[nodiscard]] double log_horizon() const noexcept { return log_horizon_; }

private:
    struct Candidate {
        double time;
        double bound;
    };

    void compute_intensities(double t, std::span<double> out) const;
    void prune(double t);

    std::shared_ptr<const KernelParams> params_;
    double log_horizon_;
    double start_;
    double now_;
    double anchor_;
    std::vector<double> excitation_;       // exponential, as of anchor_
    std::vector<double> compensator_;      // as of anchor_
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> pruned_;    // power-law events dropped from the sum
    std::deque<LoggedEvent> log_;
    std::optional<double> last_event_;
    std::optional<Candidate> pending_;
    bool column_shape_;                    // power-law shape depends on source type only
    mutable std::vector<double> scratch_;
};

} // namespace hawkesmm
