#include "hdfmcw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdfmcw/errors.hpp"

namespace hdfmcw {

double percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw StructureError("percentile: empty sample");
    if (pct < 0.0 || pct > 100.0)
        throw ConfigError("percentile: pct must be in [0, 100]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * pct / 100.0;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

SummaryStats summarize(const std::vector<double>& values) {
    SummaryStats s;
    s.count = values.size();
    if (values.empty()) return s;
    s.median = percentile(values, 50.0);
    s.p10 = percentile(values, 10.0);
    s.p25 = percentile(values, 25.0);
    s.p75 = percentile(values, 75.0);
    s.p90 = percentile(values, 90.0);
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
    s.max = *std::max_element(values.begin(), values.end());
    return s;
}

} // namespace hdfmcw
