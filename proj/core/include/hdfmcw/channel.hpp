#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdfmcw/iq_signal.hpp"
#include "hdfmcw/radar_config.hpp"
#include "hdfmcw/scene.hpp"

namespace hdfmcw {

/**
 * Closed-form dechirped IF composite for one radar (gapless configs only).
 *
 * Each reflector at two-way delay dt contributes a tone at f_r = S*dt with
 * start phase -2*pi*f_c*dt - pi*S*dt^2 (the residual video phase term) and
 * amplitude reflect_amplitude / R^2 (two-way spreading, 1 m reference).
 * Tags additionally ride the complex fundamental of their square-wave
 * modulation, exp(j*(2*pi*f_m*t + phase)), scaled by 2/pi; motion is
 * piecewise-constant within a chirp (R evaluated at chirp starts), which
 * makes Doppler emerge as a comb shift riding with f_m.  Noise is added
 * per the scene's snr_db / noise_power_db / per-radar noise floor, from a
 * stream derived from (scene.rng_seed, radar_id, antenna).
 */
IqSignal simulate_if_fast(const Scene& scene, const std::string& radar_id,
                          const RadarConfig& cfg);

/// Per-antenna variant for radars with rx_antennas > 1 (element i sits at
/// position_m + i * antenna_spacing_m * normalize(array_axis); the tx
/// reference stays at element 0).
std::vector<IqSignal> simulate_if_fast_array(const Scene& scene,
                                             const std::string& radar_id,
                                             const RadarConfig& cfg);

struct OracleOptions {
    int oversample = 0;            // 0 = auto: ceil(2.5 * B / f_s)
    int delay_kernel_halfwidth = 32;
    int decim_kernel_halfwidth = 32;
};

/**
 * Reference simulation on an oversampled RF-equivalent timeline: baseband
 * chirp train (with real inter-chirp gaps), windowed-sinc fractional
 * delays, analytic carrier phase exp(-j*2*pi*f_c*dt), true +/-1 square
 * wave tag modulation, conj(rx)*tx dechirping, then anti-alias filtering
 * and decimation back to cfg.sample_rate_hz.  Slow but trustworthy; used
 * to validate the fast path.  Output length num_chirps*(P+gap) samples.
 */
IqSignal simulate_rf_oracle(const Scene& scene, const std::string& radar_id,
                            const RadarConfig& cfg, const OracleOptions& opts = {});

/// Adds circular complex white Gaussian noise at the requested SNR
/// (relative to the signal's mean power).  +infinity returns the input
/// unchanged.  Same seed, same signal -> same output, bit for bit.
IqSignal add_noise(const IqSignal& sig, double snr_db, std::uint64_t seed);

/// Raw capture dump: <prefix>.iq holds little-endian float32 interleaved
/// I/Q; <prefix>.iq.json holds sample rate, start time and the config.
void write_iq_dump(const IqSignal& sig, const RadarConfig& cfg,
                   const std::string& path_prefix);
IqSignal read_iq_dump(const std::string& path_prefix, RadarConfig* cfg_out = nullptr);

} // namespace hdfmcw
