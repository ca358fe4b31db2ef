#include <algorithm>
#include <cmath>
#include <vector>

#include <hdfmcw/channel.hpp>
#include <hdfmcw/errors.hpp>
#include <hdfmcw/localizer.hpp>
#include <hdfmcw/metrics.hpp>
#include <hdfmcw/tracker.hpp>

#include "doctest.h"
#include "test_helpers.hpp"

using namespace hdfmcw;

namespace {

// Long-symbol front end sized for mobility work: 2080 chirps of 32 us give
// a 66.6 ms capture, enough for walking-pace range migration to disperse
// the comb peaks measurably.
RadarConfig long_symbol_config() {
    RadarConfig cfg;
    cfg.chirp_duration_s = 32e-6;
    cfg.sample_rate_hz = 8e6;
    cfg.num_chirps = 2080;
    return cfg;
}

struct Capture {
    IqSignal sig;
    TagDetection det;
    double fm = 0.0;
};

Capture capture_with_speed(const RadarConfig& cfg, double speed_mps,
                           double fm_extra_hz = 0.0) {
    Scene scene = one_tag_scene(6.0, fm_at_residue(cfg, 1, 77) + fm_extra_hz);
    scene.tags[0].velocity_mps = {speed_mps, 0.0, 0.0};
    Capture cap;
    cap.fm = scene.tags[0].fm_nominal_hz;
    cap.sig = simulate_if_fast(scene, "r0", cfg);
    const Spectrum spec = if_spectrum(cap.sig, cfg);
    const auto dets = detect_fm(spec, cfg);
    REQUIRE(!dets.empty());
    const int residue =
        static_cast<int>(std::llround(cap.fm / spec.bin_spacing_hz)) % cfg.num_chirps;
    cap.det = det_near_residue(dets, residue, 80); // movers smear tens of bins
    return cap;
}

double fitted_slope(const Track& track) {
    REQUIRE(track.samples.size() >= 2);
    double st = 0.0, sr = 0.0, stt = 0.0, str = 0.0;
    const double n = static_cast<double>(track.samples.size());
    for (const auto& s : track.samples) {
        st += s.t_s;
        sr += s.range_m;
        stt += s.t_s * s.t_s;
        str += s.t_s * s.range_m;
    }
    return (n * str - st * sr) / (n * stt - st * st);
}

} // namespace

TEST_SUITE("tracker") {

TEST_CASE("mobility threshold is inclusive at the boundary") {
    CHECK(classify_mobile(1.4));
    CHECK(classify_mobile(5.0));
    CHECK(!classify_mobile(1.3999));
    CHECK(!classify_mobile(0.0));
}

TEST_CASE("static tags score near-zero dispersion on and off the bin grid") {
    const RadarConfig cfg = long_symbol_config();
    for (double extra : {0.0, 0.4 * cfg.symbol_bin_hz()}) {
        const Capture cap = capture_with_speed(cfg, 0.0, extra);
        const double disp = dispersion_hz(cap.sig, cfg, cap.det);
        CHECK(disp < 0.2);
        CHECK(!classify_mobile(disp));
    }
}

TEST_CASE("dispersion grows with radial speed and walking pace reads mobile") {
    const RadarConfig cfg = long_symbol_config();
    const Capture slow = capture_with_speed(cfg, 0.10);
    const Capture walk = capture_with_speed(cfg, 0.17);
    const Capture fast = capture_with_speed(cfg, 0.30);

    const double d_slow = dispersion_hz(slow.sig, cfg, slow.det);
    const double d_walk = dispersion_hz(walk.sig, cfg, walk.det);
    const double d_fast = dispersion_hz(fast.sig, cfg, fast.det);

    CHECK(d_slow < d_walk);
    CHECK(d_walk < d_fast);
    CHECK(classify_mobile(d_walk));

    // The same capture tracks to the commanded radial speed.
    TrackOptions topts;
    topts.tag_id = "t0";
    topts.fm_nominal_hz = walk.fm;
    const Track tr = track(walk.sig, cfg, walk.det, 130, topts);
    CHECK(std::abs(fitted_slope(tr) - 0.17) < 0.05 * 0.17);

    // 520-chirp stride at 32 us chirps updates every 16.64 ms (~60 Hz).
    const Track sparse = track(walk.sig, cfg, walk.det, 520, topts);
    REQUIRE(sparse.samples.size() >= 2);
    const double period = sparse.samples[1].t_s - sparse.samples[0].t_s;
    CHECK(period == doctest::Approx(520 * cfg.chirp_duration_s).epsilon(1e-9));
    CHECK(1.0 / period == doctest::Approx(60.1).epsilon(0.01));
}

TEST_CASE("a static track is flat and evenly timestamped") {
    const RadarConfig cfg; // default front end
    const Capture cap = capture_with_speed(cfg, 0.0);
    TrackOptions topts;
    topts.fm_nominal_hz = cap.fm;
    const Track tr = track(cap.sig, cfg, cap.det, 16, topts);
    REQUIRE(tr.samples.size() >= 10);

    const double pad_step_m =
        cfg.sample_rate_hz / (cfg.samples_per_chirp() * 128.0) / cfg.range_to_fr(1.0);
    for (const auto& s : tr.samples)
        CHECK(std::abs(s.range_m - 6.0) <= pad_step_m);
    for (std::size_t i = 1; i < tr.samples.size(); ++i) {
        CHECK(tr.samples[i].t_s > tr.samples[i - 1].t_s);
        CHECK(tr.samples[i].t_s - tr.samples[i - 1].t_s ==
              doctest::Approx(16 * cfg.chirp_duration_s).epsilon(1e-9));
    }
    // Window centers sit mid-chirp, offset by the edge guard.
    CHECK(tr.samples[0].t_s ==
          doctest::Approx((8 + 0.5) * cfg.chirp_duration_s).epsilon(1e-9));
}

TEST_CASE("a modulation drift displaces the track uniformly at the leak rate") {
    const RadarConfig cfg; // default front end
    const Capture base = capture_with_speed(cfg, 0.0);
    const Capture shifted = capture_with_speed(cfg, 0.0, 600.0);

    TrackOptions topts;
    topts.fm_nominal_hz = base.fm; // table knows the nominal, not the drift
    const Track a = track(base.sig, cfg, base.det, 32, topts);
    const Track b = track(shifted.sig, cfg, shifted.det, 32, topts);
    REQUIRE(a.samples.size() == b.samples.size());

    // The comb shift and the nominal correction cancel in the snapped
    // residue, so the drift leaks into range at exactly 1/(2S/c) m per Hz
    // (38.4 um/Hz here) -- the same constant for every window, leaving the
    // track shape untouched.
    const double leak_m = 600.0 / cfg.range_to_fr(1.0);
    const double pad_step_m =
        cfg.sample_rate_hz / (cfg.samples_per_chirp() * 128.0) / cfg.range_to_fr(1.0);
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        CHECK(std::abs(b.samples[i].range_m - a.samples[i].range_m - leak_m) <=
              pad_step_m);
}

TEST_CASE("reversing the trajectory mirrors the fitted motion") {
    const RadarConfig cfg; // default front end, 16.4 ms capture
    const double span_s = cfg.num_chirps * cfg.chirp_duration_s;
    const double v = 3.0;

    Scene fwd = one_tag_scene(6.0, fm_at_residue(cfg, 7, 40));
    fwd.tags[0].velocity_mps = {v, 0.0, 0.0};
    Scene bwd = fwd;
    bwd.tags[0].position_m = {6.0 + v * span_s, 0.0, 0.0};
    bwd.tags[0].velocity_mps = {-v, 0.0, 0.0};

    TrackOptions topts;
    topts.fm_nominal_hz = fwd.tags[0].fm_nominal_hz;
    auto track_of = [&](const Scene& scene) {
        const IqSignal sig = simulate_if_fast(scene, "r0", cfg);
        const auto dets = detect_fm(if_spectrum(sig, cfg), cfg);
        REQUIRE(!dets.empty());
        return track(sig, cfg, det_near_residue(dets, 40, 40), 16, topts);
    };
    const Track tf = track_of(fwd);
    const Track tb = track_of(bwd);

    const double sf = fitted_slope(tf);
    const double sb = fitted_slope(tb);
    CHECK(std::abs(sf - v) < 0.05 * v);
    CHECK(std::abs(sb + v) < 0.05 * v);
    CHECK(std::abs(sf + sb) < 0.05 * v);
}

TEST_CASE("tracker rejects malformed requests") {
    const RadarConfig cfg; // default front end
    const Capture cap = capture_with_speed(cfg, 0.0);
    CHECK_THROWS_AS(track(cap.sig, cfg, cap.det, 0, {}), ConfigError);

    TrackOptions guard_heavy;
    guard_heavy.edge_guard_chirps = cfg.num_chirps; // nothing left to window
    CHECK_THROWS_AS(track(cap.sig, cfg, cap.det, 16, guard_heavy), ConfigError);
    TrackOptions negative_guard;
    negative_guard.edge_guard_chirps = -1;
    CHECK_THROWS_AS(track(cap.sig, cfg, cap.det, 16, negative_guard), ConfigError);

    DispersionOptions dopts;
    dopts.num_windows = 0;
    CHECK_THROWS_AS(dispersion_hz(cap.sig, cfg, cap.det, dopts), ConfigError);

    TagDetection bad = cap.det;
    bad.offset_bins = 0;
    CHECK_THROWS_AS(track(cap.sig, cfg, bad, 16, {}), StructureError);
    CHECK_THROWS_AS(dispersion_hz(cap.sig, cfg, bad), StructureError);
}

} // TEST_SUITE
