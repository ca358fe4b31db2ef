#pragma once

#include <cstdint>

#include "hdfmcw/common.hpp"

namespace hdfmcw {

/**
 * FMCW front-end parameters for one interrogation.
 *
 * The interrogation symbol is num_chirps back-to-back copies of the same
 * up-chirp (bandwidth_hz over chirp_duration_s).  interchirp_gap_s models
 * readers that insert idle time between chirps; captures taken with a gap
 * are spliced back into the canonical gapless symbol before processing.
 */
struct RadarConfig {
    double carrier_hz = 60e9;
    double bandwidth_hz = 250e6;
    double chirp_duration_s = 64e-6;
    double sample_rate_hz = 8e6;     // complex IF sample rate
    int num_chirps = 256;
    double interchirp_gap_s = 0.0;
    double tx_power_dbm = 8.0;       // carried as metadata; amplitudes are
                                     // specified at a 1 m reference instead

    /// B / T, in Hz/s.
    double slope() const { return bandwidth_hz / chirp_duration_s; }

    /// T * f_s; validate() guarantees this is an exact integer.
    int samples_per_chirp() const;

    /// Gap expressed in IF samples (exact integer after validate()).
    int gap_samples() const;

    /// num_chirps * samples_per_chirp: length of the gapless symbol.
    std::int64_t symbol_samples() const;

    /// Spacing of the symbol-length DFT grid, 1 / (N * T).
    double symbol_bin_hz() const {
        return 1.0 / (num_chirps * chirp_duration_s);
    }

    /// Beat frequency for a two-way path of `range_m` meters.
    double range_to_fr(double range_m) const {
        return 2.0 * range_m * slope() / kSpeedOfLight;
    }

    /// Throws ConfigError naming the violated invariant.
    void validate() const;
};

} // namespace hdfmcw
