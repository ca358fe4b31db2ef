#include "hdfmcw/radar_config.hpp"

#include <cmath>
#include <string>

#include "hdfmcw/errors.hpp"

namespace hdfmcw {
namespace {

// Product must be an integer up to double rounding of the inputs.
bool integral(double x, double tol = 1e-6) {
    return std::abs(x - std::round(x)) <= tol * std::max(1.0, std::abs(x));
}

} // namespace

int RadarConfig::samples_per_chirp() const {
    return static_cast<int>(std::round(chirp_duration_s * sample_rate_hz));
}

int RadarConfig::gap_samples() const {
    return static_cast<int>(std::round(interchirp_gap_s * sample_rate_hz));
}

std::int64_t RadarConfig::symbol_samples() const {
    return static_cast<std::int64_t>(num_chirps) * samples_per_chirp();
}

void RadarConfig::validate() const {
    if (!(carrier_hz > 0))
        throw ConfigError("radar config: carrier_hz must be > 0");
    if (!(bandwidth_hz > 0))
        throw ConfigError("radar config: bandwidth_hz must be > 0");
    if (!(chirp_duration_s > 0))
        throw ConfigError("radar config: chirp_duration_s must be > 0");
    if (!(sample_rate_hz > 0))
        throw ConfigError("radar config: sample_rate_hz must be > 0");
    if (num_chirps < 1)
        throw ConfigError("radar config: num_chirps must be >= 1");
    if (interchirp_gap_s < 0)
        throw ConfigError("radar config: interchirp_gap_s must be >= 0");
    const double spc = chirp_duration_s * sample_rate_hz;
    if (!integral(spc))
        throw ConfigError(
            "radar config: chirp_duration_s * sample_rate_hz = " +
            std::to_string(spc) + " is not an integer sample count");
    if (interchirp_gap_s > 0 && !integral(interchirp_gap_s * sample_rate_hz))
        throw ConfigError(
            "radar config: interchirp_gap_s * sample_rate_hz = " +
            std::to_string(interchirp_gap_s * sample_rate_hz) +
            " is not an integer sample count");
}

} // namespace hdfmcw
