#include "hdfmcw/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hdfmcw/errors.hpp"
#include "hdfmcw/fft_utils.hpp"

namespace hdfmcw {
namespace {

double descale_for_gap(const RadarConfig& cfg) {
    // a modulation at f_m crosses a spliced capture at f_m*(T+g)/T, so
    // measured offsets map back through T/(T+g)
    return cfg.chirp_duration_s / (cfg.chirp_duration_s + cfg.interchirp_gap_s);
}

void check_spectrum(const Spectrum& spec) {
    if (spec.bins.empty()) throw StructureError("spectrum: empty");
    if (spec.grid_stride < 1) throw StructureError("spectrum: grid_stride must be >= 1");
    if (spec.bins.size() % spec.grid_stride != 0)
        throw StructureError("spectrum: length is not a multiple of grid_stride");
}

// folded power per residue class
std::vector<double> fold_residues(const Spectrum& spec) {
    const int n = spec.grid_stride;
    const std::size_t p = spec.bins.size() / n;
    std::vector<double> folded(n, 0.0);
    for (std::size_t m = 0; m < p; ++m)
        for (int r = 0; r < n; ++r)
            folded[r] += std::norm(spec.bins[m * n + r]);
    return folded;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

Spectrum if_spectrum(const IqSignal& sig, const RadarConfig& cfg) {
    cfg.validate();
    sig.validate();
    if (sig.sample_rate_hz != cfg.sample_rate_hz)
        throw StructureError("if_spectrum: signal sample rate " +
                             std::to_string(sig.sample_rate_hz) +
                             " differs from config " +
                             std::to_string(cfg.sample_rate_hz));
    if (static_cast<std::int64_t>(sig.size()) != cfg.symbol_samples())
        throw StructureError(
            "if_spectrum: signal holds " + std::to_string(sig.size()) +
            " samples, expected num_chirps * samples_per_chirp = " +
            std::to_string(cfg.symbol_samples()) +
            " (splice gapped captures with reconstruct_gapless first)");
    Spectrum spec;
    spec.bins = fft_forward(sig.samples);
    spec.grid_stride = cfg.num_chirps;
    spec.bin_spacing_hz = cfg.sample_rate_hz / static_cast<double>(spec.bins.size());
    spec.sample_rate_hz = cfg.sample_rate_hz;
    return spec;
}

std::vector<TagDetection> detect_fm(const Spectrum& spec, const RadarConfig& cfg,
                                    const DetectOptions& opts) {
    check_spectrum(spec);
    const int n = spec.grid_stride;
    if (n < 2) return {};
    const auto folded = fold_residues(spec);
    const double total = std::accumulate(folded.begin(), folded.end(), 0.0);
    if (total <= 0.0) return {};

    std::vector<double> off_grid(folded.begin() + 1, folded.end());
    const double floor = std::max(median_of(off_grid), 1e-300);
    const double snr_gate = floor * db_to_power(opts.min_snr_db);
    const double abs_gate = total * db_to_power(opts.min_power_rel_db);
    const double descale = descale_for_gap(cfg);

    std::vector<TagDetection> out;
    for (int r = 1; r < n; ++r) {
        if (folded[r] <= snr_gate || folded[r] <= abs_gate) continue;
        TagDetection d;
        d.offset_bins = r;
        d.offset_hz = r * spec.bin_spacing_hz * descale;
        d.power_db = power_to_db(folded[r] / total);
        d.snr_db = power_to_db(folded[r] / floor);
        out.push_back(d);
    }
    std::sort(out.begin(), out.end(), [](const TagDetection& a, const TagDetection& b) {
        if (a.power_db != b.power_db) return a.power_db > b.power_db;
        return a.offset_bins < b.offset_bins;
    });
    return out;
}

Spectrum isolate_tag(const Spectrum& spec, const TagDetection& det) {
    check_spectrum(spec);
    const int n = spec.grid_stride;
    if (det.offset_bins < 1 || det.offset_bins >= n)
        throw StructureError("isolate_tag: offset_bins " +
                             std::to_string(det.offset_bins) +
                             " outside [1, grid_stride-1]");
    const std::size_t p = spec.bins.size() / n;
    Spectrum out;
    out.bins.assign(spec.bins.size(), cplx(0.0, 0.0));
    out.bin_spacing_hz = spec.bin_spacing_hz;
    out.grid_stride = spec.grid_stride;
    out.sample_rate_hz = spec.sample_rate_hz;
    for (std::size_t m = 0; m < p; ++m)
        out.bins[m * n] = spec.bins[m * n + det.offset_bins];
    return out;
}

std::vector<cplx> padded_window_spectrum(const Spectrum& clean, const RadarConfig& cfg,
                                         int pad_factor) {
    check_spectrum(clean);
    if (pad_factor < 1) throw ConfigError("pad_factor must be >= 1");
    const int n = clean.grid_stride;
    const std::size_t p = clean.bins.size() / n;
    if (static_cast<int>(p) != cfg.samples_per_chirp() || n != cfg.num_chirps)
        throw StructureError("padded_window_spectrum: spectrum shape does not match config");

    // The isolated signal is T-periodic, so the mid-symbol chirp window is
    // (up to a constant scale) the P-point inverse DFT of the grid bins;
    // tests pin the equivalence against the literal full-length route.
    std::vector<cplx> grid(p);
    for (std::size_t m = 0; m < p; ++m) grid[m] = clean.bins[m * n];
    std::vector<cplx> window = fft_inverse(grid);
    window.resize(p * static_cast<std::size_t>(pad_factor), cplx(0.0, 0.0));
    return fft_forward(window);
}

double extract_fr(const Spectrum& clean, const RadarConfig& cfg,
                  const ExtractOptions& opts) {
    const auto padded = padded_window_spectrum(clean, cfg, opts.pad_factor);
    const std::size_t len = padded.size();
    std::size_t peak = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double m = std::norm(padded[i]);
        if (m > best) {
            best = m;
            peak = i;
        }
    }
    if (best == 0.0)
        throw NoSignalError("extract_fr: isolated spectrum is all zero");

    double bin = static_cast<double>(peak);
    if (opts.refine_peak && peak > 0 && peak + 1 < len) {
        const double a = std::norm(padded[peak - 1]);
        const double c = std::norm(padded[peak + 1]);
        if (a > 0.0 && c > 0.0) {
            // parabola vertex through log magnitudes at peak-1, peak, peak+1
            const double la = 0.5 * std::log(a);
            const double lb = 0.5 * std::log(best);
            const double lc = 0.5 * std::log(c);
            const double denom = la - 2.0 * lb + lc;
            if (denom < 0.0) bin += 0.5 * (la - lc) / denom;
        }
    }
    return bin * cfg.sample_rate_hz / static_cast<double>(len);
}

double fr_to_range(double fr_hz, const RadarConfig& cfg) {
    cfg.validate();
    if (fr_hz < 0) throw ConfigError("fr_to_range: negative beat frequency");
    if (fr_hz >= cfg.sample_rate_hz)
        throw RangeAmbiguityError(
            "fr_to_range: " + std::to_string(fr_hz) +
            " Hz is at or beyond the representable span f_s");
    return kSpeedOfLight * fr_hz * cfg.chirp_duration_s / (2.0 * cfg.bandwidth_hz);
}

namespace {

// one tag's energy may straddle adjacent residues (off-grid f_m, motion);
// keep the strongest detection of each contiguous run
std::vector<TagDetection> merge_adjacent(std::vector<TagDetection> dets) {
    std::sort(dets.begin(), dets.end(), [](const auto& a, const auto& b) {
        return a.offset_bins < b.offset_bins;
    });
    std::vector<TagDetection> out;
    int run_end = -2; // last residue folded into the current run
    for (const auto& d : dets) {
        if (!out.empty() && d.offset_bins == run_end + 1) {
            if (d.power_db > out.back().power_db) out.back() = d;
        } else {
            out.push_back(d);
        }
        run_end = d.offset_bins;
    }
    return out;
}

// A square-wave tag also rings at odd multiples of f_m (3rd at -9.5 dB,
// 5th at -14 dB), which fold onto residues 3r and 5r.  Those would be
// reported as phantom tags, except when the id table expects a real tag
// there: a known id is never discarded on harmonic suspicion.
std::vector<TagDetection> reject_harmonic_ghosts(std::vector<TagDetection> dets, int n,
                                                 const std::vector<int>& expected) {
    std::sort(dets.begin(), dets.end(), [](const auto& a, const auto& b) {
        return a.power_db > b.power_db;
    });
    std::vector<TagDetection> kept;
    for (const auto& d : dets) {
        bool ghost = false;
        bool claimed = false;
        for (int r : expected)
            if (std::abs(d.offset_bins - r) <= 1) claimed = true;
        if (!claimed) {
            for (const auto& k : kept) {
                for (int h : {3, 5}) {
                    const int hr = (k.offset_bins * h) % n;
                    if (hr == 0) continue;
                    if (std::abs(d.offset_bins - hr) <= 1 &&
                        d.power_db <= k.power_db - 6.0) {
                        ghost = true;
                        break;
                    }
                }
                if (ghost) break;
            }
        }
        if (!ghost) kept.push_back(d);
    }
    return kept;
}

} // namespace

std::vector<RangeEstimate> localize_all(const IqSignal& sig, const RadarConfig& cfg,
                                        const IdTable& table,
                                        const LocalizeOptions& opts) {
    for (const auto& e : table.entries) {
        if (!(e.fm_hz > 0))
            throw ConfigError("id table: entry '" + e.tag_id + "': fm_hz must be > 0");
    }
    const Spectrum spec = if_spectrum(sig, cfg);
    const int n = spec.grid_stride;
    const double descale = descale_for_gap(cfg);
    const double apparent_scale = 1.0 / descale; // f_m -> spliced-timeline offset

    // ID spacing sanity: entries must land on distinct residues
    std::vector<int> expected_residues;
    for (const auto& e : table.entries) {
        const double apparent = e.fm_hz * apparent_scale;
        const int r = static_cast<int>(std::llround(apparent / spec.bin_spacing_hz)) % n;
        if (r == 0)
            throw ConfigError("id table: entry '" + e.tag_id +
                              "' lands on the clutter grid (f_m is a multiple of 1/T) "
                              "and can never be detected");
        expected_residues.push_back(r);
    }
    for (std::size_t i = 0; i < expected_residues.size(); ++i)
        for (std::size_t j = i + 1; j < expected_residues.size(); ++j)
            if (expected_residues[i] == expected_residues[j])
                throw ConfigError("id table: entries '" + table.entries[i].tag_id +
                                  "' and '" + table.entries[j].tag_id +
                                  "' collide on residue " +
                                  std::to_string(expected_residues[i]) +
                                  "; ids must be spaced at least one symbol bin apart");

    auto dets = merge_adjacent(detect_fm(spec, cfg, opts.detect));
    if (opts.reject_harmonics)
        dets = reject_harmonic_ghosts(std::move(dets), n, expected_residues);
    std::sort(dets.begin(), dets.end(), [](const auto& a, const auto& b) {
        return a.offset_bins < b.offset_bins;
    });

    const auto folded = fold_residues(spec);
    const double window_hz = spec.bin_spacing_hz * n * descale; // unambiguous f_m span

    std::vector<RangeEstimate> out(dets.size());
    std::vector<const IdTableEntry*> match(dets.size(), nullptr);
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const auto& det = dets[i];
        RangeEstimate& est = out[i];
        est.offset_bins = det.offset_bins;
        est.fm_detected_hz = det.offset_hz;
        est.snr_db = det.snr_db;

        if (opts.refine_fm_subbin) {
            // centroid of the folded power over the residue and its neighbors
            double wsum = 0.0, csum = 0.0;
            for (int dr = -1; dr <= 1; ++dr) {
                const int r = det.offset_bins + dr;
                if (r < 1 || r >= n) continue;
                wsum += folded[r];
                csum += folded[r] * r;
            }
            if (wsum > 0.0) {
                const double frac_resid = csum / wsum - det.offset_bins;
                est.fm_detected_hz += frac_resid * spec.bin_spacing_hz * descale;
            }
        }

        // resolve against the table: nearest expected offset within tolerance
        double best_dist = 0.0;
        for (const auto& e : table.entries) {
            const double expected =
                std::fmod(e.fm_hz * apparent_scale, 1.0 / cfg.chirp_duration_s) * descale;
            double d = std::abs(est.fm_detected_hz - expected);
            d = std::min(d, window_hz - d); // circular in the unambiguous span
            const double tol =
                std::max(e.fm_hz * table.ppm_tolerance * 1e-6, spec.bin_spacing_hz * descale);
            if (d <= tol && (!match[i] || d < best_dist)) {
                match[i] = &e;
                best_dist = d;
            }
        }
    }

    // Several detections can claim one id: a tag's own square-wave harmonic
    // or mirror sideband may land (mod the symbol grid) next to its
    // fundamental.  The fundamental is the strongest of the family, so a
    // clearly strongest claimant wins and the rest are demoted to unmatched;
    // claimants of comparable strength are a genuine ambiguity.
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!match[i]) continue;
        std::size_t winner = i;
        for (std::size_t j = 0; j < out.size(); ++j)
            if (match[j] == match[i] && out[j].snr_db > out[winner].snr_db) winner = j;
        bool contested = false;
        for (std::size_t j = 0; j < out.size(); ++j) {
            if (j == winner || match[j] != match[i]) continue;
            if (out[j].snr_db >= out[winner].snr_db - opts.ambiguity_margin_db)
                contested = true;
        }
        if (contested) {
            for (std::size_t j = 0; j < out.size(); ++j)
                if (match[j] == match[i]) out[j].ambiguous = true;
        } else {
            const IdTableEntry* e = match[i];
            for (std::size_t j = 0; j < out.size(); ++j)
                if (match[j] == e && j != winner) match[j] = nullptr;
        }
    }

    for (std::size_t i = 0; i < dets.size(); ++i) {
        const auto& det = dets[i];
        RangeEstimate& est = out[i];
        const IdTableEntry* best = match[i];

        // The window peak sits at f_r plus whatever modulation survived the
        // residue shift: f_m minus offset_bins * bin_spacing, which still
        // holds the grid-multiple part floor(f_m * T) / T.  The isolation
        // can never recover that part (comb lines are indistinguishable one
        // grid step apart), so it is removed arithmetically from the id
        // table's nominal f_m.  Oscillator drift then leaks into the range
        // at (actual - nominal) / (2S/c): about 4 mm per 100 Hz.
        const Spectrum clean = isolate_tag(spec, det);
        double fr = extract_fr(clean, cfg, opts.extract);
        const double shifted_out = det.offset_bins * spec.bin_spacing_hz;
        if (best) {
            fr -= best->fm_hz * apparent_scale - shifted_out;
        } else {
            // unknown tag: only the measured sub-grid offset can be removed,
            // so the range keeps an unknown multiple of c/(2B)
            fr -= est.fm_detected_hz * apparent_scale - shifted_out;
        }

        est.fr_hz = fr;
        est.range_m = fr_to_range(fr, cfg);
        if (best) {
            est.tag_id = best->tag_id;
            auto cal = opts.calibration_offset_m.find(best->tag_id);
            if (cal != opts.calibration_offset_m.end()) est.range_m -= cal->second;
        }
    }
    return out;
}

double baseline_fmcw_range(const IqSignal& sig, const RadarConfig& cfg) {
    cfg.validate();
    sig.validate();
    const int p = cfg.samples_per_chirp();
    if (static_cast<int>(sig.size()) < p)
        throw StructureError("baseline_fmcw_range: capture shorter than one chirp");
    std::vector<cplx> chirp(sig.samples.begin(), sig.samples.begin() + p);
    const auto bins = fft_forward(chirp);
    std::size_t peak = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        const double m = std::norm(bins[i]);
        if (m > best) {
            best = m;
            peak = i;
        }
    }
    if (best == 0.0) throw NoSignalError("baseline_fmcw_range: all-zero chirp");
    const double fr = static_cast<double>(peak) * cfg.sample_rate_hz / p;
    return fr_to_range(fr, cfg);
}

} // namespace hdfmcw
