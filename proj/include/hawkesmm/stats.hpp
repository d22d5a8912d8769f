#pragma once

#include <span>
#include <vector>

namespace hawkesmm::stats {

[[nodiscard]] double mean(std::span<const double> xs);
/// Sample variance (n - 1 denominator); 0 for fewer than two points.
[[nodiscard]] double variance(std::span<const double> xs);
[[nodiscard]] double stddev(std::span<const double> xs);

/// Two-sided one-sample Kolmogorov-Smirnov statistic against Exp(1).
[[nodiscard]] double ks_statistic_exp1(std::vector<double> xs);

/// Asymptotic p-value of the KS statistic `d` with sample size `n`
/// (Stephens' small-sample correction).
[[nodiscard]] double ks_pvalue(double d, std::size_t n);

struct TTestResult {
    double t{0.0};
    double dof{0.0};
    /// One-sided p-value for H1: mean(a) > mean(b).
    double p_greater{1.0};
};

/// Welch's unequal-variance t-test.
[[nodiscard]] TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

} // namespace hawkesmm::stats
