#include "hdfmcw/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "hdfmcw/errors.hpp"
#include "hdfmcw/fft_utils.hpp"

namespace hdfmcw {
namespace {

void check_det(const Spectrum& spec, const TagDetection& det) {
    if (det.offset_bins < 1 || det.offset_bins >= spec.grid_stride)
        throw StructureError("tracker: detection residue outside [1, grid_stride-1]");
}

void check_edge_guard(int guard, int num_chirps, const char* who) {
    if (guard < 0)
        throw ConfigError(std::string(who) + ": edge_guard_chirps must be >= 0");
    if (2 * guard + 1 > num_chirps)
        throw ConfigError(std::string(who) +
                          ": edge guard leaves no usable chirp windows");
}

// Null the clutter comb (residue 0), optionally drop residues far from the
// detected offset, shift the whole spectrum down by that offset and return
// the time-domain signal of what is left.
std::vector<cplx> cluster_time_domain(const Spectrum& spec, int r, int halfwidth) {
    const int n = spec.grid_stride;
    const std::size_t len = spec.bins.size();
    std::vector<cplx> shifted(len);
    for (std::size_t i = 0; i < len; ++i) {
        const std::size_t src = (i + static_cast<std::size_t>(r)) % len;
        const int res = static_cast<int>(src % n);
        bool keep = res != 0;
        if (keep && halfwidth > 0) {
            int dist = std::abs(res - r);
            dist = std::min(dist, n - dist);
            keep = dist <= halfwidth;
        }
        shifted[i] = keep ? spec.bins[src] : cplx(0.0, 0.0);
    }
    return fft_inverse(shifted);
}

// -3 dB width of a power spectrum in (fractional) samples, walking out from
// the global peak with a quadratic fit through the crossing.
double half_power_width_samples(const std::vector<double>& e) {
    const std::int64_t m = static_cast<std::int64_t>(e.size());
    const std::int64_t pk = static_cast<std::int64_t>(
        std::max_element(e.begin(), e.end()) - e.begin());
    if (e[static_cast<std::size_t>(pk)] <= 0.0)
        throw NoSignalError("dispersion: averaged window spectrum is all zero");
    const double half = e[static_cast<std::size_t>(pk)] / 2.0;
    auto at = [&](std::int64_t i) {
        return e[static_cast<std::size_t>(((i % m) + m) % m)];
    };
    auto crossing = [&](int dir) {
        std::int64_t s = 0;
        while (at(pk + dir * (s + 1)) >= half) {
            if (++s >= m)
                throw StructureError("dispersion: no half-power crossing found");
        }
        const double y0 = at(pk + dir * (s - 1));
        const double y1 = at(pk + dir * s);
        const double y2 = at(pk + dir * (s + 1));
        const double a = 0.5 * (y2 + y0) - y1;
        const double b = 0.5 * (y2 - y0);
        double t = -1.0;
        if (a != 0.0) {
            const double disc = b * b - 4.0 * a * (y1 - half);
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                for (const double root : {(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)})
                    if (root >= 0.0 && root <= 1.0001 && (t < 0.0 || root < t))
                        t = root;
            }
        }
        if (t < 0.0) t = (y2 != y1) ? (half - y1) / (y2 - y1) : 0.5;
        return static_cast<double>(s) + t;
    };
    return crossing(+1) + crossing(-1);
}

} // namespace

double dispersion_hz(const IqSignal& sig, const RadarConfig& cfg,
                     const TagDetection& det, const DispersionOptions& opts) {
    if (opts.num_windows < 1)
        throw ConfigError("dispersion: num_windows must be >= 1");
    if (opts.pad_factor < 1)
        throw ConfigError("dispersion: pad_factor must be >= 1");
    check_edge_guard(opts.edge_guard_chirps, cfg.num_chirps, "dispersion");
    const Spectrum spec = if_spectrum(sig, cfg);
    check_det(spec, det);

    const auto time_domain =
        cluster_time_domain(spec, det.offset_bins, opts.cluster_halfwidth_bins);

    const int p = cfg.samples_per_chirp();
    const std::size_t padded_len =
        static_cast<std::size_t>(p) * static_cast<std::size_t>(opts.pad_factor);
    const int lo = opts.edge_guard_chirps;
    const int hi = cfg.num_chirps - 1 - opts.edge_guard_chirps;
    const int count = std::min(opts.num_windows, hi - lo + 1);

    std::vector<double> acc(padded_len, 0.0);
    std::vector<cplx> window(padded_len);
    for (int i = 0; i < count; ++i) {
        const int chirp =
            count == 1 ? lo
                       : lo + static_cast<int>(std::llround(
                                  static_cast<double>(i) * (hi - lo) / (count - 1)));
        std::fill(window.begin(), window.end(), cplx(0.0, 0.0));
        std::copy(time_domain.begin() + static_cast<std::ptrdiff_t>(chirp) * p,
                  time_domain.begin() + static_cast<std::ptrdiff_t>(chirp) * p + p,
                  window.begin());
        const auto padded = fft_forward(window);
        for (std::size_t k = 0; k < padded_len; ++k) acc[k] += std::norm(padded[k]);
    }
    const double measured = half_power_width_samples(acc);

    // reference: an ideal (zero-migration) tone at the measured peak,
    // pushed through the identical window/pad/width pipeline
    const std::size_t pk = static_cast<std::size_t>(
        std::max_element(acc.begin(), acc.end()) - acc.begin());
    std::fill(window.begin(), window.end(), cplx(0.0, 0.0));
    for (int k = 0; k < p; ++k) {
        const double ph = 2.0 * kPi * static_cast<double>(pk) *
                          static_cast<double>(k) / static_cast<double>(padded_len);
        window[static_cast<std::size_t>(k)] = cplx(std::cos(ph), std::sin(ph));
    }
    const auto ref_padded = fft_forward(window);
    std::vector<double> ref(padded_len);
    for (std::size_t k = 0; k < padded_len; ++k) ref[k] = std::norm(ref_padded[k]);
    const double reference = half_power_width_samples(ref);

    const double step_hz = cfg.sample_rate_hz / static_cast<double>(padded_len);
    return std::max(0.0, (measured - reference) * step_hz);
}

bool classify_mobile(double dispersion, double threshold_hz) {
    return dispersion >= threshold_hz;
}

Track track(const IqSignal& sig, const RadarConfig& cfg, const TagDetection& det,
            int update_interval_chirps, const TrackOptions& opts) {
    if (update_interval_chirps < 1)
        throw ConfigError("track: update_interval_chirps must be >= 1");
    check_edge_guard(opts.edge_guard_chirps, cfg.num_chirps, "track");
    const Spectrum spec = if_spectrum(sig, cfg);
    check_det(spec, det);

    const int r = det.offset_bins;
    const auto time_domain =
        cluster_time_domain(spec, r, opts.cluster_halfwidth_bins);

    const int p = cfg.samples_per_chirp();
    const int pad = std::max(1, opts.extract.pad_factor);
    const std::size_t padded_len = static_cast<std::size_t>(p) * pad;

    Track out;
    out.tag_id = opts.tag_id;
    out.update_interval_chirps = update_interval_chirps;
    const int guard = opts.edge_guard_chirps;
    for (int c = guard; c + 1 <= cfg.num_chirps - guard; c += update_interval_chirps) {
        std::vector<cplx> window(
            time_domain.begin() + static_cast<std::ptrdiff_t>(c) * p,
            time_domain.begin() + static_cast<std::ptrdiff_t>(c) * p + p);
        window.resize(padded_len, cplx(0.0, 0.0));
        const auto padded = fft_forward(window);

        std::size_t peak = 0;
        double best = 0.0;
        std::vector<double> pws(padded_len);
        for (std::size_t i = 0; i < padded_len; ++i) {
            pws[i] = std::norm(padded[i]);
            if (pws[i] > best) {
                best = pws[i];
                peak = i;
            }
        }
        if (best == 0.0)
            throw NoSignalError("track: window " + std::to_string(c) + " is all zero");

        double bin = static_cast<double>(peak);
        if (opts.extract.refine_peak && peak > 0 && peak + 1 < padded_len &&
            pws[peak - 1] > 0.0 && pws[peak + 1] > 0.0) {
            const double la = 0.5 * std::log(pws[peak - 1]);
            const double lb = 0.5 * std::log(best);
            const double lc = 0.5 * std::log(pws[peak + 1]);
            const double denom = la - 2.0 * lb + lc;
            if (denom < 0.0) bin += 0.5 * (la - lc) / denom;
        }
        double fr = bin * cfg.sample_rate_hz / static_cast<double>(padded_len);
        if (opts.fm_nominal_hz > 0.0) {
            // remove the modulation left over after the r-bin comb shift
            const double apparent_scale =
                (cfg.chirp_duration_s + cfg.interchirp_gap_s) / cfg.chirp_duration_s;
            fr -= opts.fm_nominal_hz * apparent_scale - r * spec.bin_spacing_hz;
        }

        std::sort(pws.begin(), pws.end());
        const double floor = std::max(pws[padded_len / 2], 1e-300);

        TrackSample s;
        // physical frame spacing includes any inter-chirp gap even though
        // the spectrum math ran on the spliced timeline
        const double frame_s = cfg.chirp_duration_s + cfg.interchirp_gap_s;
        s.t_s = sig.t0_s + c * frame_s + 0.5 * cfg.chirp_duration_s +
                opts.timestamp_offset_s;
        s.range_m = fr_to_range(fr, cfg);
        s.snr_db = power_to_db(best / floor);
        out.samples.push_back(s);
    }
    return out;
}

} // namespace hdfmcw
