#include "hawkesmm/hawkes.hpp"

#include "hawkesmm/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hawkesmm {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw std::invalid_argument("KernelParams: " + what);
    }
}

void require_matrix(const std::vector<double>& m, std::size_t dim, const char* name) {
    require(m.size() == dim * dim, std::string(name) + " must be " + std::to_string(dim) + "x" +
                                       std::to_string(dim));
    for (double v : m) {
        require(std::isfinite(v), std::string(name) + " entries must be finite");
    }
}

} // namespace

double KernelParams::kernel(std::size_t i, std::size_t j, double age) const {
    const std::size_t k = i * dim() + j;
    if (kind == KernelKind::Exponential) {
        return alpha[k] * std::exp(-gamma[k] * age);
    }
    return alpha_pl[k] * std::pow(1.0 + age / delta_pl[k], -beta_pl[k]);
}

double KernelParams::kernel_integral(std::size_t i, std::size_t j, double age) const {
    const std::size_t k = i * dim() + j;
    if (kind == KernelKind::Exponential) {
        return alpha[k] / gamma[k] * -std::expm1(-gamma[k] * age);
    }
    const double b = beta_pl[k];
    const double d = delta_pl[k];
    return alpha_pl[k] * d / (b - 1.0) * (1.0 - std::pow(1.0 + age / d, 1.0 - b));
}

double KernelParams::branching_entry(std::size_t i, std::size_t j) const {
    const std::size_t k = i * dim() + j;
    if (kind == KernelKind::Exponential) {
        return alpha[k] / gamma[k];
    }
    return alpha_pl[k] * delta_pl[k] / (beta_pl[k] - 1.0);
}

std::vector<double> KernelParams::branching_matrix() const {
    const std::size_t m = dim();
    std::vector<double> out(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            out[i * m + j] = branching_entry(i, j);
        }
    }
    return out;
}

bool KernelParams::has_row_constant_decay() const {
    if (kind != KernelKind::Exponential) {
        return false;
    }
    const std::size_t m = dim();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 1; j < m; ++j) {
            if (gamma[i * m + j] != gamma[i * m]) {
                return false;
            }
        }
    }
    return true;
}

void KernelParams::validate() const {
    const std::size_t m = dim();
    require(m > 0, "mu must be non-empty");
    for (double v : mu) {
        require(std::isfinite(v) && v >= 0.0, "mu entries must be finite and >= 0");
    }
    if (kind == KernelKind::Exponential) {
        require_matrix(alpha, m, "alpha");
        require_matrix(gamma, m, "gamma");
        for (std::size_t k = 0; k < m * m; ++k) {
            require(alpha[k] >= 0.0, "alpha entries must be >= 0");
            require(gamma[k] > 0.0, "gamma entries must be > 0");
        }
    } else {
        require_matrix(alpha_pl, m, "alpha_pl");
        require_matrix(beta_pl, m, "beta_pl");
        require_matrix(delta_pl, m, "delta_pl");
        for (std::size_t k = 0; k < m * m; ++k) {
            require(alpha_pl[k] >= 0.0, "alpha_pl entries must be >= 0");
            require(beta_pl[k] > 1.0, "beta_pl entries must be > 1");
            require(delta_pl[k] > 0.0, "delta_pl entries must be > 0");
        }
        require(truncation_horizon > 0.0, "truncation_horizon must be > 0");
    }
    const double rho = spectral_radius(branching_matrix(), m);
    require(rho < 1.0, "unstable kernel: branching spectral radius " + std::to_string(rho) + " >= 1");
}

KernelParams make_exponential_kernel(std::vector<double> mu, std::vector<double> alpha,
                                     std::vector<double> gamma) {
    KernelParams p;
    p.kind = KernelKind::Exponential;
    p.mu = std::move(mu);
    p.alpha = std::move(alpha);
    p.gamma = std::move(gamma);
    p.validate();
    return p;
}

KernelParams make_power_law_kernel(std::vector<double> mu, std::vector<double> alpha,
                                   std::vector<double> beta, std::vector<double> delta,
                                   double truncation_horizon) {
    KernelParams p;
    p.kind = KernelKind::PowerLaw;
    p.mu = std::move(mu);
    p.alpha_pl = std::move(alpha);
    p.beta_pl = std::move(beta);
    p.delta_pl = std::move(delta);
    p.truncation_horizon = truncation_horizon;
    p.validate();
    return p;
}

double spectral_radius(std::span<const double> matrix, std::size_t dim) {
    if (matrix.size() != dim * dim) {
        throw std::invalid_argument("spectral_radius: matrix size mismatch");
    }
    Eigen::MatrixXd m(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = matrix[i * dim + j];
        }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

HawkesClock::HawkesClock(const KernelParams& params, double log_horizon, double start_time)
    : HawkesClock(std::make_shared<const KernelParams>(params), log_horizon, start_time) {}

HawkesClock::HawkesClock(std::shared_ptr<const KernelParams> params, double log_horizon, double start_time)
    : params_(std::move(params)),
      log_horizon_(log_horizon),
      start_(start_time),
      now_(start_time),
      anchor_(start_time),
      column_shape_(false) {
    if (!params_) {
        throw ContractViolation("HawkesClock: null params");
    }
    params_->validate();
    if (!(log_horizon_ > 0.0)) {
        throw ContractViolation("HawkesClock: log_horizon must be > 0");
    }
    const std::size_t m = params_->dim();
    excitation_.assign(params_->kind == KernelKind::Exponential ? m * m : 0, 0.0);
    compensator_.assign(m, 0.0);
    counts_.assign(m, 0);
    pruned_.assign(m, 0);
    scratch_.assign(m, 0.0);
    if (params_->kind == KernelKind::PowerLaw) {
        log_horizon_ = std::max(log_horizon_, params_->truncation_horizon);
        column_shape_ = true;
        for (std::size_t i = 1; i < m && column_shape_; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (params_->beta_pl[i * m + j] != params_->beta_pl[j] ||
                    params_->delta_pl[i * m + j] != params_->delta_pl[j]) {
                    column_shape_ = false;
                    break;
                }
            }
        }
    }
}

void HawkesClock::compute_intensities(double t, std::span<double> out) const {
    const KernelParams& p = *params_;
    const std::size_t m = p.dim();
    std::copy(p.mu.begin(), p.mu.end(), out.begin());
    if (p.kind == KernelKind::Exponential) {
        const double dt = t - anchor_;
        for (std::size_t i = 0; i < m; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const std::size_t k = i * m + j;
                if (excitation_[k] != 0.0) {
                    acc += excitation_[k] * std::exp(-p.gamma[k] * dt);
                }
            }
            out[i] += acc;
        }
        return;
    }
    if (column_shape_) {
        // Shape depends on the source type only: sum the shape per source, then mix.
        std::vector<double>& shape = scratch_;
        std::fill(shape.begin(), shape.end(), 0.0);
        for (const LoggedEvent& ev : log_) {
            const std::size_t j = ev.type;
            shape[j] += std::pow(1.0 + (t - ev.time) / p.delta_pl[j], -p.beta_pl[j]);
        }
        for (std::size_t i = 0; i < m; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                acc += p.alpha_pl[i * m + j] * shape[j];
            }
            out[i] += acc;
        }
        return;
    }
    for (const LoggedEvent& ev : log_) {
        for (std::size_t i = 0; i < m; ++i) {
            out[i] += p.kernel(i, ev.type, t - ev.time);
        }
    }
}

double HawkesClock::intensity(std::size_t i) const {
    if (i >= dim()) {
        throw ContractViolation("intensity: event type index out of range");
    }
    std::vector<double> lam(dim());
    compute_intensities(now_, lam);
    return lam[i];
}

std::vector<double> HawkesClock::intensities() const {
    std::vector<double> lam(dim());
    compute_intensities(now_, lam);
    return lam;
}

double HawkesClock::total_intensity() const {
    const auto lam = intensities();
    return std::accumulate(lam.begin(), lam.end(), 0.0);
}

std::vector<double> HawkesClock::excitation_state() const {
    if (params_->kind != KernelKind::Exponential) {
        throw ContractViolation("excitation_state: exponential kernels only");
    }
    std::vector<double> out(excitation_);
    const double dt = now_ - anchor_;
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] *= std::exp(-params_->gamma[k] * dt);
    }
    return out;
}

double HawkesClock::compensator(std::size_t i) const {
    if (i >= dim()) {
        throw ContractViolation("compensator: event type index out of range");
    }
    const KernelParams& p = *params_;
    const std::size_t m = p.dim();
    double value = p.mu[i] * (now_ - start_) + compensator_[i];
    if (p.kind == KernelKind::Exponential) {
        const double dt = now_ - anchor_;
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t k = i * m + j;
            value += excitation_[k] / p.gamma[k] * -std::expm1(-p.gamma[k] * dt);
        }
    } else {
        for (const LoggedEvent& ev : log_) {
            value += p.kernel_integral(i, ev.type, now_ - ev.time);
        }
    }
    return value;
}

double HawkesClock::truncation_error_bound(std::size_t i) const {
    const KernelParams& p = *params_;
    if (p.kind != KernelKind::PowerLaw) {
        return 0.0;
    }
    double bound = 0.0;
    for (std::size_t j = 0; j < p.dim(); ++j) {
        if (pruned_[j] > 0) {
            bound += static_cast<double>(pruned_[j]) * p.kernel(i, j, p.truncation_horizon);
        }
    }
    return bound;
}

void HawkesClock::prune(double t) {
    const KernelParams& p = *params_;
    while (!log_.empty() && log_.front().time < t - log_horizon_) {
        const LoggedEvent& ev = log_.front();
        if (p.kind == KernelKind::PowerLaw) {
            // Freeze the mass accumulated so far; the remaining tail is dropped.
            for (std::size_t i = 0; i < p.dim(); ++i) {
                compensator_[i] += p.kernel_integral(i, ev.type, t - ev.time);
            }
            ++pruned_[ev.type];
        }
        log_.pop_front();
    }
}

void HawkesClock::apply_event(std::size_t type, double t) {
    const KernelParams& p = *params_;
    const std::size_t m = p.dim();
    if (type >= m) {
        throw ContractViolation("apply_event: event type index out of range");
    }
    if (!(t >= now_)) {
        throw ContractViolation("apply_event: event time precedes clock time");
    }
    if (p.kind == KernelKind::Exponential) {
        const double dt = t - anchor_;
        for (std::size_t k = 0; k < m * m; ++k) {
            if (excitation_[k] != 0.0) {
                const double g = p.gamma[k];
                compensator_[k / m] += excitation_[k] / g * -std::expm1(-g * dt);
                excitation_[k] *= std::exp(-g * dt);
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            excitation_[i * m + type] += p.alpha[i * m + type];
        }
    }
    anchor_ = t;
    now_ = t;
    pending_.reset();
    ++counts_[type];
    last_event_ = t;
    log_.push_back({t, type});
    prune(t);
}

void HawkesClock::advance_to(double t) {
    if (!(t >= now_)) {
        throw ContractViolation("advance_to: target time precedes clock time");
    }
    if (pending_ && pending_->time <= t) {
        pending_.reset();
    }
    now_ = t;
}

std::optional<LoggedEvent> HawkesClock::sample_next_event(Rng& rng, double t_max) {
    if (!(t_max >= now_)) {
        throw ContractViolation("sample_next_event: t_max precedes clock time");
    }
    const std::size_t m = dim();
    std::vector<double> lam(m);
    for (;;) {
        if (!pending_) {
            compute_intensities(now_, lam);
            const double bound = std::accumulate(lam.begin(), lam.end(), 0.0);
            if (!(bound > 0.0)) {
                now_ = t_max;
                return std::nullopt;
            }
            pending_ = Candidate{now_ + exponential(rng, bound), bound};
        }
        if (pending_->time > t_max) {
            now_ = t_max;
            return std::nullopt;
        }
        const Candidate cand = *pending_;
        pending_.reset();
        now_ = cand.time;
        compute_intensities(cand.time, lam);
        const double total = std::accumulate(lam.begin(), lam.end(), 0.0);
        const double u = uniform01(rng) * cand.bound;
        if (u < total) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                acc += lam[i];
                if (u < acc) {
                    return LoggedEvent{cand.time, i};
                }
            }
            // Rounding left u in the last sliver; attribute to the last positive type.
            for (std::size_t i = m; i-- > 0;) {
                if (lam[i] > 0.0) {
                    return LoggedEvent{cand.time, i};
                }
            }
        }
    }
}

HistoryFeatures HawkesClock::history_features(double window) const {
    if (!(window > 0.0)) {
        throw ContractViolation("history_features: window must be > 0");
    }
    if (window > log_horizon_ * (1.0 + 1e-12)) {
        throw ContractViolation("history_features: window exceeds the retained log horizon");
    }
    HistoryFeatures out;
    out.counts.assign(dim(), 0.0);
    const double lo = now_ - window;
    for (auto it = log_.rbegin(); it != log_.rend() && it->time >= lo; ++it) {
        out.counts[it->type] += 1.0;
    }
    out.time_since_last = last_event_ ? std::min(now_ - *last_event_, window) : window;
    return out;
}

} // namespace hawkesmm
