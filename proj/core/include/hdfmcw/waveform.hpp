#pragma once

#include <span>
#include <vector>

#include "hdfmcw/iq_signal.hpp"
#include "hdfmcw/radar_config.hpp"

namespace hdfmcw {

/// Single complex baseband up-chirp exp(j*pi*S*t^2), t in [0, T).
IqSignal synth_chirp(const RadarConfig& cfg);

/**
 * Canonical interrogation symbol: num_chirps identical chirps butted
 * against each other with no idle time.  Any static reflection of this
 * waveform is exactly T-periodic, which is what confines clutter to the
 * 1/T spectral grid.  Requires interchirp_gap_s == 0.
 */
IqSignal synth_interrogation(const RadarConfig& cfg);

/**
 * Carve the per-chirp capture windows out of a (possibly gapped) capture.
 * The capture must hold num_chirps frames of samples_per_chirp + gap
 * samples each; the gap tail of every frame is dropped.
 */
std::vector<IqSignal> split_chirp_frames(const IqSignal& capture, const RadarConfig& cfg);

/**
 * Splice per-chirp windows back into the gapless symbol timeline.  The
 * result pretends the chirps were contiguous, so a modulation running at
 * f_m through real gaps shows up at the apparent offset f_m*(T+g)/T; the
 * detector undoes that scaling when it reports offsets.
 */
IqSignal reconstruct_gapless(std::span<const IqSignal> frames, const RadarConfig& cfg);

} // namespace hdfmcw
