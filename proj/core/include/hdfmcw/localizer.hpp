#pragma once

#include <map>
#include <string>
#include <vector>

#include "hdfmcw/iq_signal.hpp"
#include "hdfmcw/radar_config.hpp"

namespace hdfmcw {

/**
 * Symbol-length DFT of a gapless capture.
 *
 * With N identical chirps of P samples, anything static in the scene is
 * exactly T-periodic and can only occupy bins that are multiples of
 * grid_stride = N (spacing 1/T); a tag toggling at f_m sits off that grid
 * at residue round(f_m / bin_spacing) mod N.
 */
struct Spectrum {
    std::vector<cplx> bins;
    double bin_spacing_hz = 0.0; // 1 / (N * T)
    int grid_stride = 0;         // N
    double sample_rate_hz = 0.0; // bin_spacing_hz * bins.size()

    std::size_t size() const { return bins.size(); }
};

/// Forward DFT (unitary) of the capture; requires length N*P and matching
/// sample rates.
Spectrum if_spectrum(const IqSignal& sig, const RadarConfig& cfg);

struct TagDetection {
    int offset_bins = 0;   // residue class, in [1, grid_stride-1]
    double offset_hz = 0.0; // physical modulation offset; already de-scaled
                            // by T/(T+gap) for spliced gapped captures
    double power_db = 0.0;  // folded residue power relative to total power
    double snr_db = 0.0;    // folded residue power over the median folded floor
};

struct DetectOptions {
    double min_snr_db = 10.0;
    // Absolute guard so float rounding dust in an otherwise noiseless
    // spectrum never trips the SNR gate.  Dust folds in around -240 dB of
    // the total power; a real tag 60 dB under a strong clutter return sits
    // near -90 dB, so the gap is wide on both sides.
    double min_power_rel_db = -120.0;
};

/**
 * Folds bin powers modulo grid_stride (residue 0, the clutter comb, is
 * excluded), takes the median folded power as the noise floor and returns
 * every residue at least min_snr_db above it, strongest first.
 */
std::vector<TagDetection> detect_fm(const Spectrum& spec, const RadarConfig& cfg,
                                    const DetectOptions& opts = {});

/**
 * Spectral surgery for one detection: residue-0 bins (clutter and every
 * other static return) are dropped, the detected residue is shifted down
 * onto the grid, all other residues are zeroed.  The result is the
 * spectrum of an equivalent unmodulated scene containing only this tag.
 */
Spectrum isolate_tag(const Spectrum& spec, const TagDetection& det);

struct ExtractOptions {
    int pad_factor = 128;
    bool refine_peak = true; // 3-point parabolic interpolation on log magnitude
};

/// Zero-padded spectrum of the mid-symbol chirp window of the isolated
/// signal (pad_factor * P bins); extract_fr peaks on this.
std::vector<cplx> padded_window_spectrum(const Spectrum& clean, const RadarConfig& cfg,
                                         int pad_factor);

/// Beat-frequency estimate from an isolated spectrum.
double extract_fr(const Spectrum& clean, const RadarConfig& cfg,
                  const ExtractOptions& opts = {});

/// R = c * f_r * T / (2 * B); rejects f_r at or past the unambiguous span.
double fr_to_range(double fr_hz, const RadarConfig& cfg);

struct IdTableEntry {
    std::string tag_id;
    double fm_hz = 0.0; // nominal modulation frequency
};

struct IdTable {
    std::vector<IdTableEntry> entries;
    double ppm_tolerance = 1000.0; // match window, ppm of the nominal f_m
};

struct RangeEstimate {
    std::string tag_id;          // empty when no table entry matched
    int offset_bins = 0;
    double fm_detected_hz = 0.0; // physical modulation offset (see TagDetection)
    double fr_hz = 0.0;
    double range_m = 0.0;
    double snr_db = 0.0;
    bool ambiguous = false;      // another detection resolved to the same id
};

struct LocalizeOptions {
    DetectOptions detect;
    ExtractOptions extract;
    bool reject_harmonics = true;  // drop residues matching 3x/5x of a
                                   // stronger detection at lower power
    bool refine_fm_subbin = false; // envelope-weighted centroid over folded
                                   // powers; biased, so opt-in
    // When several detections claim one id, the strongest wins unless a
    // rival is within this margin (square-wave odd harmonics sit >= 9.5 dB
    // below their fundamental; equals are a real collision).
    double ambiguity_margin_db = 6.0;
    std::map<std::string, double> calibration_offset_m; // subtracted per tag
};

/**
 * Full range pipeline: spectrum -> detect -> merge contiguous residue runs
 * (one tag's energy may straddle two residues) -> optional harmonic
 * rejection -> per detection isolate/extract/convert -> resolve ids against
 * the table.  Output is sorted by residue.
 */
std::vector<RangeEstimate> localize_all(const IqSignal& sig, const RadarConfig& cfg,
                                        const IdTable& table,
                                        const LocalizeOptions& opts = {});

/// Conventional single-chirp FMCW range: FFT argmax of the first chirp,
/// no padding, no interpolation.  Resolution-limited to c / (2 * B).
double baseline_fmcw_range(const IqSignal& sig, const RadarConfig& cfg);

} // namespace hdfmcw
