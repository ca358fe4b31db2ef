#pragma once

#include <cstddef>
#include <vector>

namespace hdfmcw {

/// Percentile with inclusive linear interpolation on the sorted values:
/// rank h = (n-1) * pct/100, result = v[floor(h)] + frac(h) * (v[floor(h)+1]
/// - v[floor(h)]).  pct must be in [0, 100]; empty input is an error.
double percentile(std::vector<double> values, double pct);

struct SummaryStats {
    std::size_t count = 0;
    double median = 0.0;
    double p10 = 0.0, p25 = 0.0, p75 = 0.0, p90 = 0.0;
    double mean = 0.0;
    double max = 0.0;
};

SummaryStats summarize(const std::vector<double>& values);

} // namespace hdfmcw
