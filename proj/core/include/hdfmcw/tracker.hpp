#pragma once

#include <string>
#include <vector>

#include "hdfmcw/localizer.hpp"

namespace hdfmcw {

struct TrackSample {
    double t_s = 0.0;     // window center on the capture timeline
    double range_m = 0.0;
    double snr_db = 0.0;  // window peak over window median
};

struct Track {
    std::string tag_id;
    int update_interval_chirps = 0;
    std::vector<TrackSample> samples;
};

struct DispersionOptions {
    int num_windows = 64;  // chirp windows averaged across the capture
    int pad_factor = 512;  // zero-padding of each window spectrum
    // Residues kept around the detection; 0 keeps every non-clutter residue.
    int cluster_halfwidth_bins = 0;
    // Chirps skipped at both capture edges: the cluster filter is circular
    // over the capture, and a tag that moved is not circularly continuous,
    // so the first/last few chirps carry the wrap transient.
    int edge_guard_chirps = 8;
};

/**
 * Frequency dispersion of one detection: the -3 dB width of the averaged
 * single-chirp window power spectra (clutter nulled, comb shifted down by
 * the detected offset), minus the same width measured on an ideal tone.
 * A static tag scores ~0 however its tone straddles the bin grid; range
 * migration across the capture drifts the window peaks apart and broadens
 * the average monotonically in radial speed.
 */
double dispersion_hz(const IqSignal& sig, const RadarConfig& cfg,
                     const TagDetection& det, const DispersionOptions& opts = {});

/// Mobile iff dispersion >= threshold (inclusive).
bool classify_mobile(double dispersion_hz, double threshold_hz = 1.4);

struct TrackOptions {
    ExtractOptions extract;
    std::string tag_id;
    // Residues kept around the detection when eliminating everything else;
    // 0 keeps every non-clutter residue.  The full-cluster default matters:
    // collapsing a moving tag onto single comb lines (as isolate_tag does)
    // would freeze its apparent range.
    int cluster_halfwidth_bins = 0;
    // First window starts this many chirps in, and no window reaches closer
    // than this to the end (see DispersionOptions::edge_guard_chirps).
    int edge_guard_chirps = 8;
    double timestamp_offset_s = 0.0; // per-radar clock jitter hook
    // Nominal f_m of the tracked tag.  The comb shift only removes the
    // sub-grid part of the modulation; the grid-multiple part
    // floor(f_m * T) / T must come from the id table.  0 skips the
    // correction and every range keeps that constant displacement.
    double fm_nominal_hz = 0.0;
};

/**
 * Windowed range history of one modulated reflector: null the clutter
 * comb, shift the whole spectrum down by the detected offset, go back to
 * the time domain and run the padded-peak range estimator on one chirp
 * window every update_interval_chirps chirps.
 */
Track track(const IqSignal& sig, const RadarConfig& cfg, const TagDetection& det,
            int update_interval_chirps, const TrackOptions& opts = {});

} // namespace hdfmcw
