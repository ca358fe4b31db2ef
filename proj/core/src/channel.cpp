#include "hdfmcw/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "hdfmcw/errors.hpp"

namespace hdfmcw {
namespace {

// Phase helpers keep arguments small before hitting sin/cos: the carrier
// term f_c*dt runs to thousands of cycles and would otherwise eat the
// mantissa.
double wrap_cycles(double cycles) {
    double f = cycles - std::floor(cycles);
    return f;
}

cplx phasor_cycles(double cycles) {
    return std::polar(1.0, kTwoPi * wrap_cycles(cycles));
}

Vec3 normalized(const Vec3& v) {
    const double n = v.norm();
    return {v.x / n, v.y / n, v.z / n};
}

Vec3 antenna_position(const RadarNode& radar, int antenna) {
    if (antenna == 0) return radar.position_m;
    return radar.position_m + normalized(radar.array_axis) *
                                  (radar.antenna_spacing_m * antenna);
}

// The capture is complex I/Q, so IF tones occupy [0, f_s).  The oracle is
// stricter: its decimation low-pass passes |f| < 0.45 f_s, so tones must
// stay clear of the transition band.
void check_in_band(double f_tone, double limit_hz, const std::string& what) {
    if (f_tone >= limit_hz)
        throw RangeAmbiguityError(
            what + ": IF tone at " + std::to_string(f_tone) +
            " Hz is at or beyond the representable span " + std::to_string(limit_hz) +
            " Hz (reduce range, slope or modulation frequency)");
}

// One reflector tap on the fast path: geometry plus modulation terms.
struct Tap {
    std::string label;       // for ambiguity diagnostics
    Vec3 position;           // at t = 0
    Vec3 velocity;           // zero for clutter
    double excess_path_m = 0.0;
    double amplitude_1m = 0.0;  // includes 2/pi and tap attenuation for tags
    double mod_freq_hz = 0.0;   // 0 for clutter
    double mod_phase_rad = 0.0;
};

void render_tap(std::vector<cplx>& out, const Tap& tap, const Vec3& tx_pos,
                const Vec3& rx_pos, const RadarConfig& cfg) {
    const int p = cfg.samples_per_chirp();
    const int n_chirps = cfg.num_chirps;
    const double fs = cfg.sample_rate_hz;
    const double s = cfg.slope();
    const double t_chirp = cfg.chirp_duration_s;
    const bool moving = tap.velocity.norm() > 0.0;

    std::vector<cplx> tone(p);
    for (int n = 0; n < n_chirps; ++n) {
        const double t_n = n * t_chirp;
        const Vec3 pos = tap.position + tap.velocity * t_n;
        const double r_tx = (pos - tx_pos).norm();
        const double r_rx = (pos - rx_pos).norm();
        const double dt = (r_tx + r_rx + tap.excess_path_m) / kSpeedOfLight;
        const double fr = s * dt;
        if (n == 0 || moving) {
            check_in_band(fr + tap.mod_freq_hz, cfg.sample_rate_hz, tap.label);
            // A modulated tap stands in for the square wave's fundamental
            // line, which carries 2/pi of the full toggle amplitude.
            const double fundamental =
                tap.mod_freq_hz != 0.0 ? kSquareWaveFundamental : 1.0;
            const double amp = fundamental * tap.amplitude_1m / (r_tx * r_rx);
            // start phase: carrier round trip plus residual video phase
            const double phase0 =
                -kTwoPi * cfg.carrier_hz * dt - kPi * s * dt * dt + tap.mod_phase_rad;
            const double f_tone = fr + tap.mod_freq_hz;
            for (int k = 0; k < p; ++k)
                tone[k] = amp * std::polar(1.0, kTwoPi * f_tone * k / fs + phase0);
        }
        // modulation phase advance across chirp starts keeps the comb coherent
        const cplx rot = tap.mod_freq_hz == 0.0
                             ? cplx(1.0, 0.0)
                             : phasor_cycles(tap.mod_freq_hz * t_n);
        cplx* dst = out.data() + static_cast<std::ptrdiff_t>(n) * p;
        for (int k = 0; k < p; ++k) dst[k] += rot * tone[k];
    }
}

std::vector<Tap> collect_taps(const Scene& scene) {
    std::vector<Tap> taps;
    for (std::size_t i = 0; i < scene.clutter.size(); ++i) {
        const auto& c = scene.clutter[i];
        Tap t;
        t.label = "clutter[" + std::to_string(i) + "]";
        t.position = c.position_m;
        t.amplitude_1m = c.reflect_amplitude;
        taps.push_back(std::move(t));
    }
    for (const auto& tag : scene.tags) {
        Tap t;
        t.label = "tag '" + tag.id + "'";
        t.position = tag.position_m;
        t.velocity = tag.velocity_mps;
        t.amplitude_1m = tag.reflect_amplitude;
        t.mod_freq_hz = effective_fm(tag);
        t.mod_phase_rad = tag.phase_rad;
        taps.push_back(t);
        for (const auto& mp : scene.multipath) {
            if (mp.tag_id != tag.id) continue;
            Tap m = t;
            m.label = "multipath tap of tag '" + tag.id + "'";
            m.excess_path_m = mp.excess_path_m;
            m.amplitude_1m *= db_to_amplitude(mp.attenuation_db);
            taps.push_back(std::move(m));
        }
    }
    return taps;
}

// Noise precedence: composite SNR, explicit power, per-radar floor, none.
IqSignal apply_scene_noise(IqSignal sig, const Scene& scene, const RadarNode& radar,
                           std::uint64_t stream_seed) {
    if (scene.snr_db) return add_noise(sig, *scene.snr_db, stream_seed);
    double power_db;
    if (scene.noise_power_db) {
        power_db = *scene.noise_power_db;
    } else if (!std::isnan(radar.noise_floor_dbm)) {
        power_db = radar.noise_floor_dbm;
    } else {
        return sig;
    }
    const double sigma2 = db_to_power(power_db);
    std::mt19937_64 rng(stream_seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2 / 2.0));
    for (auto& s : sig.samples) s += cplx(gauss(rng), gauss(rng));
    return sig;
}

} // namespace

std::vector<IqSignal> simulate_if_fast_array(const Scene& scene,
                                             const std::string& radar_id,
                                             const RadarConfig& cfg) {
    cfg.validate();
    scene.validate();
    if (cfg.interchirp_gap_s != 0.0)
        throw ConfigError(
            "simulate_if_fast: gapped captures are modeled by the RF oracle + "
            "reconstruct_gapless; interchirp_gap_s must be 0 here");
    const RadarNode& radar = scene.radar(radar_id);
    const auto taps = collect_taps(scene);

    std::vector<IqSignal> out(radar.rx_antennas);
    for (int a = 0; a < radar.rx_antennas; ++a) {
        IqSignal sig;
        sig.sample_rate_hz = cfg.sample_rate_hz;
        sig.samples.assign(cfg.symbol_samples(), cplx(0.0, 0.0));
        const Vec3 rx = antenna_position(radar, a);
        for (const auto& tap : taps)
            render_tap(sig.samples, tap, radar.position_m, rx, cfg);
        out[a] = apply_scene_noise(std::move(sig), scene, radar,
                                   derive_seed(scene.rng_seed, radar_id, a));
    }
    return out;
}

IqSignal simulate_if_fast(const Scene& scene, const std::string& radar_id,
                          const RadarConfig& cfg) {
    return simulate_if_fast_array(scene, radar_id, cfg).front();
}

// ---------------------------------------------------------------------------
// RF-equivalent oracle
// ---------------------------------------------------------------------------

namespace {

double blackman(double x) { // x in [-1, 1]
    return 0.42 + 0.5 * std::cos(kPi * x) + 0.08 * std::cos(kTwoPi * x);
}

// +/-1 square wave, sign of sin(2*pi*f*t + phase); sgn(0) := +1.
double square_wave(double f, double t, double phase_rad) {
    const double frac = wrap_cycles(f * t + phase_rad / kTwoPi);
    return frac < 0.5 ? 1.0 : -1.0;
}

struct OracleTimeline {
    int oversample;
    double fs_os;
    int p_os, gap_os, frame_os;
    std::int64_t total_os;
};

} // namespace

IqSignal simulate_rf_oracle(const Scene& scene, const std::string& radar_id,
                            const RadarConfig& cfg, const OracleOptions& opts) {
    cfg.validate();
    scene.validate();
    const RadarNode& radar = scene.radar(radar_id);
    if (radar.rx_antennas > 1)
        throw ConfigError("simulate_rf_oracle: models a single rx antenna");

    OracleTimeline tl;
    tl.oversample = opts.oversample > 0
                        ? opts.oversample
                        : static_cast<int>(std::ceil(2.5 * cfg.bandwidth_hz /
                                                     cfg.sample_rate_hz));
    tl.oversample = std::max(tl.oversample, 1);
    tl.fs_os = cfg.sample_rate_hz * tl.oversample;
    if (tl.fs_os < 2.0 * cfg.bandwidth_hz)
        throw ConfigError(
            "simulate_rf_oracle: oversample * sample_rate must cover twice the "
            "sweep bandwidth");
    tl.p_os = cfg.samples_per_chirp() * tl.oversample;
    tl.gap_os = cfg.gap_samples() * tl.oversample;
    tl.frame_os = tl.p_os + tl.gap_os;
    tl.total_os = static_cast<std::int64_t>(cfg.num_chirps) * tl.frame_os;

    // baseband tx train (zeros during gaps)
    std::vector<cplx> tx(tl.total_os, cplx(0.0, 0.0));
    {
        const double s = cfg.slope();
        std::vector<cplx> one(tl.p_os);
        for (int k = 0; k < tl.p_os; ++k) {
            const double t = k / tl.fs_os;
            one[k] = std::polar(1.0, kPi * s * t * t);
        }
        for (int n = 0; n < cfg.num_chirps; ++n)
            std::copy(one.begin(), one.end(),
                      tx.begin() + static_cast<std::ptrdiff_t>(n) * tl.frame_os);
    }

    const int hw = opts.delay_kernel_halfwidth;
    // Reading tx at fractional index m - d:  with D = -d, qi = floor(D) and
    // mu = D - qi, the interpolant is sum_j tx[m + qi + j] * h(j - mu).
    auto tx_at = [&](std::int64_t base, const double* kernel) {
        cplx acc(0.0, 0.0);
        for (int j = -hw + 1; j <= hw; ++j) {
            const std::int64_t idx = base + j;
            if (idx < 0 || idx >= tl.total_os) continue;
            acc += tx[idx] * kernel[j + hw - 1];
        }
        return acc;
    };
    auto make_kernel = [&](double frac, std::vector<double>& k) {
        // taps h(j - frac), j = -hw+1 .. hw, sinc * blackman
        k.resize(2 * hw);
        const double sin_pf = std::sin(kPi * frac);
        for (int j = -hw + 1; j <= hw; ++j) {
            const double x = j - frac;
            double v;
            if (std::abs(x) < 1e-12) {
                v = 1.0;
            } else {
                const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
                v = -sgn * sin_pf / (kPi * x); // sin(pi*(j-frac)) = -(-1)^j sin(pi*frac)
            }
            k[j + hw - 1] = v * blackman(x / hw);
        }
    };

    std::vector<cplx> rx(tl.total_os, cplx(0.0, 0.0));
    const auto taps = collect_taps(scene);
    std::vector<double> kernel;
    for (const auto& tap : taps) {
        const bool moving = tap.velocity.norm() > 0.0;
        const bool modulated = tap.mod_freq_hz != 0.0;

        if (moving) {
            const double r0 = (tap.position - radar.position_m).norm();
            check_in_band(cfg.slope() * (2.0 * r0 + tap.excess_path_m) / kSpeedOfLight +
                              std::abs(tap.mod_freq_hz),
                          0.4 * cfg.sample_rate_hz, tap.label + " (oracle low-pass)");
        }
        double amp0 = 0.0;
        cplx carrier0;
        std::int64_t qi0 = 0;
        if (!moving) {
            const double r = (tap.position - radar.position_m).norm();
            const double dt = (2.0 * r + tap.excess_path_m) / kSpeedOfLight;
            check_in_band(cfg.slope() * dt + std::abs(tap.mod_freq_hz),
                          0.4 * cfg.sample_rate_hz, tap.label + " (oracle low-pass)");
            amp0 = tap.amplitude_1m / (r * r);
            carrier0 = phasor_cycles(-cfg.carrier_hz * dt);
            const double neg_d = -dt * tl.fs_os;
            qi0 = static_cast<std::int64_t>(std::floor(neg_d));
            make_kernel(neg_d - qi0, kernel);
        }

        for (std::int64_t m = 0; m < tl.total_os; ++m) {
            const double t = m / tl.fs_os;
            double amp = amp0;
            cplx carrier = carrier0;
            std::int64_t qi = qi0;
            if (moving) {
                const Vec3 pos = tap.position + tap.velocity * t;
                const double r = (pos - radar.position_m).norm();
                const double dt = (2.0 * r + tap.excess_path_m) / kSpeedOfLight;
                amp = tap.amplitude_1m / (r * r);
                carrier = phasor_cycles(-cfg.carrier_hz * dt);
                const double neg_d = -dt * tl.fs_os;
                qi = static_cast<std::int64_t>(std::floor(neg_d));
                make_kernel(neg_d - qi, kernel);
            }
            cplx v = tx_at(m + qi, kernel.data());
            if (v == cplx(0.0, 0.0)) continue;
            if (modulated)
                v *= square_wave(tap.mod_freq_hz, t, tap.mod_phase_rad);
            rx[m] += amp * carrier * v;
        }
    }

    // dechirp on the oversampled timeline
    std::vector<cplx> mixed(tl.total_os);
    for (std::int64_t m = 0; m < tl.total_os; ++m)
        mixed[m] = std::conj(rx[m]) * tx[m];

    // anti-alias + decimate back to f_s
    const int dhw = opts.decim_kernel_halfwidth * tl.oversample;
    std::vector<double> lp(2 * dhw + 1);
    {
        const double cutoff = 0.45 / tl.oversample; // cycles per os-sample
        double sum = 0.0;
        for (int j = -dhw; j <= dhw; ++j) {
            const double x = 2.0 * cutoff * j;
            const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
            lp[j + dhw] = 2.0 * cutoff * sinc * blackman(static_cast<double>(j) / dhw);
            sum += lp[j + dhw];
        }
        for (auto& v : lp) v /= sum; // exact unity DC gain
    }

    IqSignal out;
    out.sample_rate_hz = cfg.sample_rate_hz;
    const std::int64_t n_out =
        static_cast<std::int64_t>(cfg.num_chirps) *
        (cfg.samples_per_chirp() + cfg.gap_samples());
    out.samples.assign(n_out, cplx(0.0, 0.0));
    for (std::int64_t k = 0; k < n_out; ++k) {
        cplx acc(0.0, 0.0);
        const std::int64_t center = k * tl.oversample;
        for (int j = -dhw; j <= dhw; ++j) {
            const std::int64_t idx = center - j;
            if (idx < 0 || idx >= tl.total_os) continue;
            acc += mixed[idx] * lp[j + dhw];
        }
        out.samples[k] = acc;
    }

    return apply_scene_noise(std::move(out), scene, radar,
                             derive_seed(scene.rng_seed, radar_id, 0));
}

IqSignal add_noise(const IqSignal& sig, double snr_db, std::uint64_t seed) {
    sig.validate();
    if (std::isinf(snr_db) && snr_db > 0) return sig;
    double power = 0.0;
    for (const auto& s : sig.samples) power += std::norm(s);
    power /= static_cast<double>(sig.samples.size());
    if (power == 0.0)
        throw NoSignalError("add_noise: signal power is zero, SNR undefined");
    const double sigma2 = power / db_to_power(snr_db);
    IqSignal out = sig;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2 / 2.0));
    for (auto& s : out.samples) s += cplx(gauss(rng), gauss(rng));
    return out;
}

// ---------------------------------------------------------------------------
// raw capture dump
// ---------------------------------------------------------------------------

namespace {

void put_le_float(std::ofstream& f, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    const char bytes[4] = {
        static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
        static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    f.write(bytes, 4);
}

float get_le_float(std::ifstream& f) {
    unsigned char bytes[4];
    f.read(reinterpret_cast<char*>(bytes), 4);
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                               (static_cast<std::uint32_t>(bytes[1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[3]) << 24);
    float v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

nlohmann::json config_to_json(const RadarConfig& cfg) {
    return {{"carrier_hz", cfg.carrier_hz},
            {"bandwidth_hz", cfg.bandwidth_hz},
            {"chirp_duration_s", cfg.chirp_duration_s},
            {"sample_rate_hz", cfg.sample_rate_hz},
            {"num_chirps", cfg.num_chirps},
            {"interchirp_gap_s", cfg.interchirp_gap_s},
            {"tx_power_dbm", cfg.tx_power_dbm}};
}

} // namespace

void write_iq_dump(const IqSignal& sig, const RadarConfig& cfg,
                   const std::string& path_prefix) {
    sig.validate();
    std::ofstream bin(path_prefix + ".iq", std::ios::binary);
    if (!bin) throw IoError("cannot open '" + path_prefix + ".iq' for writing");
    for (const auto& s : sig.samples) {
        put_le_float(bin, static_cast<float>(s.real()));
        put_le_float(bin, static_cast<float>(s.imag()));
    }
    if (!bin) throw IoError("short write to '" + path_prefix + ".iq'");

    nlohmann::json meta = {{"format", "interleaved float32 I/Q, little-endian"},
                           {"sample_rate_hz", sig.sample_rate_hz},
                           {"t0_s", sig.t0_s},
                           {"num_samples", sig.samples.size()},
                           {"radar_config", config_to_json(cfg)}};
    std::ofstream side(path_prefix + ".iq.json");
    if (!side) throw IoError("cannot open '" + path_prefix + ".iq.json' for writing");
    side << meta.dump(2) << "\n";
}

IqSignal read_iq_dump(const std::string& path_prefix, RadarConfig* cfg_out) {
    std::ifstream side(path_prefix + ".iq.json");
    if (!side) throw IoError("cannot open '" + path_prefix + ".iq.json'");
    nlohmann::json meta = nlohmann::json::parse(side, nullptr, true);
    IqSignal sig;
    sig.sample_rate_hz = meta.at("sample_rate_hz").get<double>();
    sig.t0_s = meta.at("t0_s").get<double>();
    const auto n = meta.at("num_samples").get<std::size_t>();
    if (cfg_out) {
        const auto& c = meta.at("radar_config");
        cfg_out->carrier_hz = c.at("carrier_hz").get<double>();
        cfg_out->bandwidth_hz = c.at("bandwidth_hz").get<double>();
        cfg_out->chirp_duration_s = c.at("chirp_duration_s").get<double>();
        cfg_out->sample_rate_hz = c.at("sample_rate_hz").get<double>();
        cfg_out->num_chirps = c.at("num_chirps").get<int>();
        cfg_out->interchirp_gap_s = c.at("interchirp_gap_s").get<double>();
        cfg_out->tx_power_dbm = c.at("tx_power_dbm").get<double>();
    }
    std::ifstream bin(path_prefix + ".iq", std::ios::binary);
    if (!bin) throw IoError("cannot open '" + path_prefix + ".iq'");
    sig.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float re = get_le_float(bin);
        const float im = get_le_float(bin);
        sig.samples[i] = cplx(re, im);
    }
    if (!bin) throw IoError("short read from '" + path_prefix + ".iq'");
    return sig;
}

} // namespace hdfmcw
