#include "hawkesmm/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hawkesmm::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
    if (xs.size() < 2) {
        return 0.0;
    }
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - m) * (x - m);
    }
    return ss / static_cast<double>(xs.size() - 1);
}

double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

double ks_statistic_exp1(std::vector<double> xs) {
    if (xs.empty()) {
        throw std::invalid_argument("ks_statistic_exp1: empty sample");
    }
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = -std::expm1(-std::max(0.0, xs[i]));
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 0.2) {
        return 1.0;
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
        if (term < 1e-16) {
            break;
        }
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) {
        throw std::invalid_argument("welch_t_test: need at least two samples per group");
    }
    const double va = variance(a) / static_cast<double>(a.size());
    const double vb = variance(b) / static_cast<double>(b.size());
    TTestResult r;
    const double diff = mean(a) - mean(b);
    if (va + vb == 0.0) {
        r.t = diff > 0 ? std::numeric_limits<double>::infinity() : (diff < 0 ? -std::numeric_limits<double>::infinity() : 0.0);
        r.dof = static_cast<double>(a.size() + b.size() - 2);
        r.p_greater = diff > 0 ? 0.0 : (diff < 0 ? 1.0 : 0.5);
        return r;
    }
    r.t = diff / std::sqrt(va + vb);
    r.dof = (va + vb) * (va + vb) /
            (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    boost::math::students_t dist(r.dof);
    r.p_greater = boost::math::cdf(boost::math::complement(dist, r.t));
    return r;
}

} // namespace hawkesmm::stats
