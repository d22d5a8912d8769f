#include "hawkesmm/metrics.hpp"

#include "hawkesmm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace hawkesmm {

double periods_per_year(double horizon) {
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("periods_per_year: horizon must be > 0");
    }
    return 252.0 * 6.5 * 3600.0 / horizon;
}

std::optional<double> annualized_sharpe(std::span<const double> pnls, double initial_cash, double horizon) {
    if (pnls.size() < 2) {
        return std::nullopt;
    }
    if (!(initial_cash > 0.0)) {
        throw std::invalid_argument("annualized_sharpe: initial cash must be > 0");
    }
    if (std::adjacent_find(pnls.begin(), pnls.end(), std::not_equal_to<>()) == pnls.end()) {
        return std::nullopt;
    }
    std::vector<double> r(pnls.begin(), pnls.end());
    for (double& x : r) x /= initial_cash;
    const double sd = stats::stddev(r);
    if (!(sd > 0.0)) {
        return std::nullopt;
    }
    return stats::mean(r) / sd * std::sqrt(periods_per_year(horizon));
}

} // namespace hawkesmm
