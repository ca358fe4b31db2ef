#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <limits>

#include <hdfmcw/channel.hpp>
#include <hdfmcw/errors.hpp>
#include <hdfmcw/localizer.hpp>
#include <hdfmcw/waveform.hpp>

#include "doctest.h"
#include "test_helpers.hpp"

using namespace hdfmcw;

namespace {

// Folded power per residue class (what detect_fm peaks on).
std::vector<double> folded_powers(const Spectrum& spec) {
    std::vector<double> folded(spec.grid_stride, 0.0);
    for (std::size_t i = 0; i < spec.bins.size(); ++i)
        folded[i % spec.grid_stride] += std::norm(spec.bins[i]);
    return folded;
}

double db(double power_ratio) { return 10.0 * std::log10(power_ratio); }

} // namespace

TEST_SUITE("channel") {

TEST_CASE("static clutter occupies only the chirp-rate grid") {
    const RadarConfig cfg = small_config();
    Scene scene;
    scene.radars.push_back({.id = "r0"});
    scene.clutter.push_back({{4.13, 0.0, 0.0}, 5.0});
    scene.clutter.push_back({{-2.0, 9.27, 0.0}, 2.0});
    const IqSignal sig = simulate_if_fast(scene, "r0", cfg);
    const Spectrum spec = if_spectrum(sig, cfg);

    double on_grid = 0.0, off_grid = 0.0;
    for (std::size_t i = 0; i < spec.bins.size(); ++i) {
        const double mag = std::abs(spec.bins[i]);
        if (i % spec.grid_stride == 0)
            on_grid = std::max(on_grid, mag);
        else
            off_grid = std::max(off_grid, mag);
    }
    REQUIRE(on_grid > 0.0);
    CHECK(20.0 * std::log10(off_grid / on_grid) < -100.0);
}

TEST_CASE("tag modulation lands at its residue class") {
    const RadarConfig cfg = small_config();
    const double fm = fm_at_residue(cfg, 2, 5);
    Scene scene = one_tag_scene(6.0, fm);
    scene.clutter.push_back({{3.0, 1.0, 0.0}, 10.0});
    const IqSignal sig = simulate_if_fast(scene, "r0", cfg);
    const auto dets = detect_fm(if_spectrum(sig, cfg), cfg);
    REQUIRE(dets.size() >= 1);
    const auto& det = det_near_residue(dets, 5);
    CHECK(det.offset_hz == doctest::Approx(5 * cfg.symbol_bin_hz()).epsilon(1e-12));
}

TEST_CASE("clutter-only capture yields no detections") {
    const RadarConfig cfg = small_config();
    Scene scene;
    scene.radars.push_back({.id = "r0"});
    scene.clutter.push_back({{5.0, 0.0, 0.0}, 8.0});
    const IqSignal sig = simulate_if_fast(scene, "r0", cfg);
    CHECK(detect_fm(if_spectrum(sig, cfg), cfg).empty());
}

TEST_CASE("oracle shows square-wave odd harmonics at textbook levels") {
    const RadarConfig cfg = small_config();
    const double fm = fm_at_residue(cfg, 2, 3); // 3rd/5th harmonics at residues 9, 15
    const Scene scene = one_tag_scene(4.0, fm);
    const IqSignal sig = simulate_rf_oracle(scene, "r0", cfg);
    const auto folded = folded_powers(if_spectrum(sig, cfg));

    const double fund = folded[3];
    REQUIRE(fund > 0.0);
    // Square-wave Fourier series: each sideband of the k-th odd harmonic
    // carries amplitude 2/(pi*k) -> powers 1/9 and 1/25 of the fundamental.
    CHECK(std::abs(db(folded[9] / fund) - (-9.54)) < 0.5);
    CHECK(std::abs(db(folded[15] / fund) - (-13.98)) < 0.5);
    // The mirror sideband at -fm folds to residue N-3 with full strength.
    CHECK(std::abs(db(folded[32 - 3] / fund)) < 0.5);
    // The fundamental dominates every other non-clutter residue.
    for (int r = 1; r < 32; ++r)
        if (r != 3 && r != 29) CHECK(folded[r] < fund * 0.51);
}

TEST_CASE("fast path matches the mixing oracle on a static scene") {
    const RadarConfig cfg = small_config();
    const double fm = fm_at_residue(cfg, 2, 5);
    Scene scene = one_tag_scene(5.2, fm);
    scene.clutter.push_back({{3.7, 0.0, 0.0}, 3.0});

    const Spectrum fast = if_spectrum(simulate_if_fast(scene, "r0", cfg), cfg);
    const Spectrum oracle = if_spectrum(simulate_rf_oracle(scene, "r0", cfg), cfg);

    // Clutter peak sits in the identical grid bin.
    const int n = fast.grid_stride;
    auto grid_argmax = [n](const Spectrum& s) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < s.bins.size(); i += n)
            if (std::abs(s.bins[i]) > std::abs(s.bins[best])) best = i;
        return best;
    };
    CHECK(grid_argmax(fast) == grid_argmax(oracle));

    // Tag fundamental within one residue bin and 1 dB after the 2/pi factor.
    const auto df = detect_fm(fast, cfg);
    const auto dor = detect_fm(oracle, cfg);
    const auto& tf = det_near_residue(df, 5, 1);
    const auto& to = det_near_residue(dor, 5, 1);
    CHECK(std::abs(tf.offset_bins - to.offset_bins) <= 1);
    const double ratio_db = 20.0 * std::log10(residue_peak_mag(fast, tf.offset_bins) /
                                              residue_peak_mag(oracle, to.offset_bins));
    CHECK(std::abs(ratio_db) < 1.0);
}

TEST_CASE("inter-chirp gaps scale the apparent modulation offset") {
    RadarConfig cfg = small_config();
    cfg.interchirp_gap_s = 4e-6; // T+g = 20 us -> apparent fm = fm * 1.25
    const double scale = (cfg.chirp_duration_s + cfg.interchirp_gap_s) / cfg.chirp_duration_s;
    // Physical fm chosen so the apparent offset is bin-exact at residue 5.
    const double fm = fm_at_residue(cfg, 2, 5) / scale;
    const Scene scene = one_tag_scene(4.0, fm);

    const IqSignal capture = simulate_rf_oracle(scene, "r0", cfg);
    REQUIRE(capture.size() ==
            static_cast<std::size_t>(cfg.num_chirps) *
                (cfg.samples_per_chirp() + cfg.gap_samples()));
    const IqSignal spliced = reconstruct_gapless(split_chirp_frames(capture, cfg), cfg);
    const auto dets = detect_fm(if_spectrum(spliced, cfg), cfg);
    REQUIRE(!dets.empty());
    const auto& det = det_near_residue(dets, 5);
    // offset_hz is de-scaled back to the physical sub-grid offset.
    CHECK(det.offset_hz ==
          doctest::Approx(5 * cfg.symbol_bin_hz() / scale).epsilon(1e-12));
}

TEST_CASE("fast path rejects tones beyond the complex IF span") {
    const RadarConfig cfg = small_config();
    const Scene scene = one_tag_scene(38.0, fm_at_residue(cfg, 2, 5));
    CHECK_THROWS_AS(simulate_if_fast(scene, "r0", cfg), RangeAmbiguityError);
}

TEST_CASE("add_noise hits the requested SNR and reproduces bit-exactly") {
    IqSignal sig;
    sig.sample_rate_hz = 1e6;
    sig.samples.resize(1u << 20);
    for (std::size_t k = 0; k < sig.size(); ++k)
        sig.samples[k] = std::polar(1.0, 0.001 * static_cast<double>(k));

    const IqSignal noisy = add_noise(sig, 10.0, 77);
    double noise_power = 0.0;
    for (std::size_t k = 0; k < sig.size(); ++k)
        noise_power += std::norm(noisy.samples[k] - sig.samples[k]);
    noise_power /= static_cast<double>(sig.size());
    CHECK(std::abs(db(1.0 / noise_power) - 10.0) < 0.5);

    const IqSignal again = add_noise(sig, 10.0, 77);
    CHECK(noisy.samples == again.samples);
    const IqSignal other = add_noise(sig, 10.0, 78);
    CHECK(noisy.samples != other.samples);

    const IqSignal clean = add_noise(sig, std::numeric_limits<double>::infinity(), 77);
    CHECK(clean.samples == sig.samples);
}

TEST_CASE("modulation phase rotates the comb but moves no energy") {
    const RadarConfig cfg = small_config();
    const double fm = fm_at_residue(cfg, 2, 7);
    Scene a = one_tag_scene(6.5, fm);
    a.clutter.push_back({{2.5, 0.0, 0.0}, 4.0});
    Scene b = a;
    b.tags[0].phase_rad = 1.234;

    const Spectrum sa = if_spectrum(simulate_if_fast(a, "r0", cfg), cfg);
    const Spectrum sb = if_spectrum(simulate_if_fast(b, "r0", cfg), cfg);
    double peak = 0.0;
    for (const auto& v : sa.bins) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < sa.bins.size(); ++i)
        CHECK(std::abs(std::abs(sa.bins[i]) - std::abs(sb.bins[i])) < 1e-9 * peak);
}

TEST_CASE("raw capture dump round-trips through float32") {
    const RadarConfig cfg = small_config();
    Scene scene = one_tag_scene(5.0, fm_at_residue(cfg, 2, 5));
    IqSignal sig = simulate_if_fast(scene, "r0", cfg);
    sig.t0_s = 0.125;

    const auto prefix = (std::filesystem::temp_directory_path() / "hdfmcw_dump_test").string();
    write_iq_dump(sig, cfg, prefix);
    RadarConfig cfg_back;
    const IqSignal back = read_iq_dump(prefix, &cfg_back);

    REQUIRE(back.size() == sig.size());
    CHECK(back.sample_rate_hz == sig.sample_rate_hz);
    CHECK(back.t0_s == sig.t0_s);
    CHECK(cfg_back.bandwidth_hz == cfg.bandwidth_hz);
    CHECK(cfg_back.num_chirps == cfg.num_chirps);
    double peak = 0.0;
    for (const auto& v : sig.samples) peak = std::max(peak, std::abs(v));
    for (std::size_t k = 0; k < sig.size(); ++k)
        CHECK(std::abs(back.samples[k] - sig.samples[k]) < 1e-6 * peak);
    std::filesystem::remove(prefix + ".iq");
    std::filesystem::remove(prefix + ".iq.json");
}

} // TEST_SUITE
