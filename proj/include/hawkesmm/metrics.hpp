#pragma once

#include <optional>
#include <span>

namespace hawkesmm {

/// Episodes of length `horizon` seconds in a 252-day, 6.5-hour trading year.
[[nodiscard]] double periods_per_year(double horizon);

/// mean(r) / std(r) * sqrt(periods_per_year) with r = pnl / initial_cash and
/// the sample (n - 1) standard deviation. Undefined (nullopt) for fewer than
/// two episodes or zero dispersion.
[[nodiscard]] std::optional<double> annualized_sharpe(std::span<const double> pnls, double initial_cash,
                                                      double horizon);

} // namespace hawkesmm
