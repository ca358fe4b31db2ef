#include <algorithm>
#include <cmath>
#include <random>

#include <hdfmcw/channel.hpp>
#include <hdfmcw/errors.hpp>
#include <hdfmcw/localizer.hpp>
#include <hdfmcw/metrics.hpp>

#include "doctest.h"
#include "test_helpers.hpp"

using namespace hdfmcw;

TEST_SUITE("localizer") {

TEST_CASE("if_spectrum is unitary and shape-checked") {
    const RadarConfig cfg = small_config();
    const Scene scene = one_tag_scene(6.0, fm_at_residue(cfg, 2, 5));
    const IqSignal sig = simulate_if_fast(scene, "r0", cfg);
    const Spectrum spec = if_spectrum(sig, cfg);

    REQUIRE(spec.bins.size() == static_cast<std::size_t>(cfg.symbol_samples()));
    CHECK(spec.grid_stride == cfg.num_chirps);
    CHECK(spec.bin_spacing_hz == doctest::Approx(cfg.symbol_bin_hz()).epsilon(1e-12));

    double spec_energy = 0.0;
    for (const auto& v : spec.bins) spec_energy += std::norm(v);
    CHECK(spec_energy == doctest::Approx(sig.energy()).epsilon(1e-9));

    IqSignal wrong = sig;
    wrong.samples.pop_back();
    CHECK_THROWS_AS(if_spectrum(wrong, cfg), StructureError);
    wrong = sig;
    wrong.sample_rate_hz *= 2.0;
    CHECK_THROWS_AS(if_spectrum(wrong, cfg), StructureError);
}

TEST_CASE("a bin-exact tone occupies exactly one bin") {
    const RadarConfig cfg = small_config();
    const std::size_t len = static_cast<std::size_t>(cfg.symbol_samples());
    const std::size_t bin = 133; // arbitrary non-grid bin
    IqSignal sig;
    sig.sample_rate_hz = cfg.sample_rate_hz;
    sig.samples.resize(len);
    for (std::size_t k = 0; k < len; ++k)
        sig.samples[k] = std::polar(1.0, 2.0 * kPi * static_cast<double>(bin) *
                                             static_cast<double>(k) / static_cast<double>(len));
    const Spectrum spec = if_spectrum(sig, cfg);
    for (std::size_t i = 0; i < len; ++i) {
        if (i == bin)
            CHECK(std::abs(spec.bins[i]) > 0.99 * std::sqrt(static_cast<double>(len)));
        else
            CHECK(std::abs(spec.bins[i]) < 1e-9 * std::sqrt(static_cast<double>(len)));
    }
}

TEST_CASE("oscillator drift moves the residue by the expected whole bins") {
    const RadarConfig cfg; // default front end: 61.035 Hz grid
    const double fm = fm_at_residue(cfg, 7, 40); // 111816.40625 Hz
    for (const auto& [ppm, want_residue] : {std::pair{-500.0, 39}, {0.0, 40}, {500.0, 41}}) {
        Scene scene = one_tag_scene(9.0, fm);
        scene.tags[0].fm_ppm_offset = ppm;
        const auto dets =
            detect_fm(if_spectrum(simulate_if_fast(scene, "r0", cfg), cfg), cfg);
        REQUIRE(!dets.empty());
        // Strongest detection near the nominal residue carries the shift.
        CHECK(det_near_residue(dets, 40, 2).offset_bins == want_residue);
    }
}

TEST_CASE("drift leaves the reported range within one pad step") {
    const RadarConfig cfg; // default front end
    const double fm = fm_at_residue(cfg, 7, 40);
    Scene scene = one_tag_scene(9.0, fm);
    const IdTable table = table_for(scene);
    // One pad-grid step in range: f_s / (P * pad) converted through 2S/c.
    const double pad_step_m =
        cfg.sample_rate_hz / (cfg.samples_per_chirp() * 128.0) / cfg.range_to_fr(1.0);

    std::vector<double> ranges;
    for (double ppm : {-500.0, 0.0, 500.0}) {
        scene.tags[0].fm_ppm_offset = ppm;
        const auto ests = localize_all(simulate_if_fast(scene, "r0", cfg), cfg, table);
        REQUIRE(ests.size() == 1);
        CHECK(ests[0].tag_id == "t0");
        ranges.push_back(ests[0].range_m);
    }
    const auto [lo, hi] = std::minmax_element(ranges.begin(), ranges.end());
    CHECK(*hi - *lo <= pad_step_m);
    for (double r : ranges) CHECK(std::abs(r - 9.0) <= pad_step_m);
}

TEST_CASE("isolate_tag surgically keeps one tag and nulls the rest") {
    const RadarConfig cfg = small_config();
    Scene scene = one_tag_scene(6.0, fm_at_residue(cfg, 2, 5));
    scene.clutter.push_back({{3.0, 0.0, 0.0}, 20.0});
    const Spectrum spec = if_spectrum(simulate_if_fast(scene, "r0", cfg), cfg);
    const auto dets = detect_fm(spec, cfg);
    REQUIRE(!dets.empty());

    const Spectrum clean = isolate_tag(spec, dets[0]);
    double in_e = 0.0, out_e = 0.0;
    for (const auto& v : spec.bins) in_e += std::norm(v);
    for (const auto& v : clean.bins) out_e += std::norm(v);
    CHECK(out_e <= in_e * (1.0 + 1e-12));
    CHECK(out_e > 0.0);
    // Everything that survives sits on the grid: no further detections.
    CHECK(detect_fm(clean, cfg).empty());

    TagDetection bad;
    bad.offset_bins = 0;
    CHECK_THROWS_AS(isolate_tag(spec, bad), StructureError);
    bad.offset_bins = cfg.num_chirps;
    CHECK_THROWS_AS(isolate_tag(spec, bad), StructureError);
}

TEST_CASE("isolated comb lines follow the chirp-window sinc envelope") {
    const RadarConfig cfg = small_config();
    // Beat frequency 0.3 grid steps past line 8.  Isolation removes only
    // the sub-grid residue of f_m = (2N + 5) * bin, so the comb peaks at
    // fr + 2/T: fractional line 10.3.  The two flanking lines then split
    // |sin(0.3 pi)| identically and their magnitudes sit at 1/(0.3) vs
    // 1/(0.7) of it, up to the Dirichlet correction.
    const double fr = (8.0 + 0.3) / cfg.chirp_duration_s;
    const double range = fr_to_range(fr, cfg);
    Scene scene = one_tag_scene(range, fm_at_residue(cfg, 2, 5));
    const Spectrum spec = if_spectrum(simulate_if_fast(scene, "r0", cfg), cfg);
    const auto dets = detect_fm(spec, cfg);
    REQUIRE(!dets.empty());
    const Spectrum clean = isolate_tag(spec, det_near_residue(dets, 5));

    const int n = cfg.num_chirps;
    const double near_line = std::abs(clean.bins[10 * n]);
    const double far_line = std::abs(clean.bins[11 * n]);
    REQUIRE(near_line > 0.0);
    CHECK(std::abs(far_line / near_line - 0.3 / 0.7) < 0.02 * (0.3 / 0.7));
}

TEST_CASE("quantization bound holds without refinement and shrinks with it") {
    const RadarConfig cfg = small_config();
    const double fm = fm_at_residue(cfg, 2, 5);
    const double fr_step = cfg.sample_rate_hz / (cfg.samples_per_chirp() * 128.0);
    const double step_m = fr_step / cfg.range_to_fr(1.0); // 4.684 mm

    std::mt19937_64 rng(90210);
    std::uniform_real_distribution<double> draw(1.0, 20.0);
    std::vector<double> err_raw, err_refined;
    for (int i = 0; i < 40; ++i) {
        const double range = draw(rng);
        const Scene scene = one_tag_scene(range, fm);
        const Spectrum spec = if_spectrum(simulate_if_fast(scene, "r0", cfg), cfg);
        const auto dets = detect_fm(spec, cfg);
        REQUIRE(!dets.empty());
        const auto& det = det_near_residue(dets, 5);
        const Spectrum clean = isolate_tag(spec, det);

        ExtractOptions raw;
        raw.refine_peak = false;
        const double fm_corr = fm - det.offset_bins * spec.bin_spacing_hz;
        err_raw.push_back(std::abs(
            fr_to_range(extract_fr(clean, cfg, raw) - fm_corr, cfg) - range));
        err_refined.push_back(std::abs(
            fr_to_range(extract_fr(clean, cfg, {}) - fm_corr, cfg) - range));
    }
    CHECK(*std::max_element(err_raw.begin(), err_raw.end()) <= 0.5 * step_m * 1.001);
    CHECK(percentile(err_refined, 50.0) <= 0.5e-3);
}

TEST_CASE("fr/range conversions are exact inverses and guard the span") {
    const RadarConfig cfg = small_config();
    CHECK(fr_to_range(0.0, cfg) == 0.0);
    CHECK(fr_to_range(2000.0, cfg) == doctest::Approx(2.0 * fr_to_range(1000.0, cfg)).epsilon(1e-12));
    for (double r : {0.5, 3.25, 17.0})
        CHECK(fr_to_range(cfg.range_to_fr(r), cfg) == doctest::Approx(r).epsilon(1e-12));
    CHECK_THROWS_AS(fr_to_range(cfg.sample_rate_hz, cfg), RangeAmbiguityError);
    CHECK_THROWS_AS(fr_to_range(-1.0, cfg), ConfigError);
}

TEST_CASE("modulation phase never changes the extracted range") {
    const RadarConfig cfg = small_config();
    const IdTable table = table_for(one_tag_scene(7.3, fm_at_residue(cfg, 2, 9)));
    std::vector<double> got;
    for (double phase : {0.0, 1.234, -2.5}) {
        Scene scene = one_tag_scene(7.3, fm_at_residue(cfg, 2, 9));
        scene.tags[0].phase_rad = phase;
        const auto ests = localize_all(simulate_if_fast(scene, "r0", cfg), cfg, table);
        REQUIRE(ests.size() == 1);
        got.push_back(ests[0].range_m);
    }
    CHECK(std::abs(got[1] - got[0]) < 1e-9);
    CHECK(std::abs(got[2] - got[0]) < 1e-9);
}

TEST_CASE("five tags with clutter all resolve to their table identities") {
    const RadarConfig cfg = small_config();
    Scene scene;
    scene.radars.push_back({.id = "r0"});
    const int residues[5] = {3, 7, 11, 18, 25};
    const double ranges[5] = {2.5, 4.0, 6.75, 9.1, 12.0};
    for (int i = 0; i < 5; ++i) {
        TagSpec tag;
        tag.id = "t" + std::to_string(i);
        tag.position_m = {ranges[i], 0.0, 0.0};
        tag.fm_nominal_hz = fm_at_residue(cfg, 2, residues[i]);
        tag.fm_ppm_offset = (i - 2) * 50.0;
        scene.tags.push_back(tag);
    }
    scene.clutter.push_back({{5.0, 2.0, 0.0}, 50.0});
    const IdTable table = table_for(scene);

    const auto ests = localize_all(simulate_if_fast(scene, "r0", cfg), cfg, table);
    REQUIRE(ests.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(ests[i].tag_id == "t" + std::to_string(i));
        CHECK(!ests[i].ambiguous);
        CHECK(std::abs(ests[i].range_m - ranges[i]) < 2.5e-3);
    }
}

TEST_CASE("a tag absent from the table surfaces as an anonymous estimate") {
    const RadarConfig cfg = small_config();
    const Scene scene = one_tag_scene(5.0, fm_at_residue(cfg, 2, 5));
    IdTable table;
    table.entries.push_back({"elsewhere", fm_at_residue(cfg, 2, 20)});
    const auto ests = localize_all(simulate_if_fast(scene, "r0", cfg), cfg, table);
    REQUIRE(ests.size() == 1);
    CHECK(ests[0].tag_id.empty());
    // Without an identity the grid-multiple part of f_m (here 2/T) is
    // unknowable, so the anonymous range keeps that constant displacement.
    const double displacement =
        2.0 * cfg.num_chirps * cfg.symbol_bin_hz() / cfg.range_to_fr(1.0);
    CHECK(std::abs(ests[0].range_m - (5.0 + displacement)) < 2.5e-3);
}

TEST_CASE("table entries colliding on one residue are rejected") {
    const RadarConfig cfg = small_config();
    const Scene scene = one_tag_scene(5.0, fm_at_residue(cfg, 2, 5));
    IdTable table;
    table.entries.push_back({"a", fm_at_residue(cfg, 2, 5)});
    table.entries.push_back({"b", fm_at_residue(cfg, 3, 5)}); // same residue, other grid step
    CHECK_THROWS_AS(localize_all(simulate_if_fast(scene, "r0", cfg), cfg, table),
                    ConfigError);
}

TEST_CASE("rival claims on one identity: clear winner or flagged collision") {
    const RadarConfig cfg = small_config();
    Scene scene;
    scene.radars.push_back({.id = "r0"});
    TagSpec a, b;
    a.id = "real";
    a.position_m = {4.0, 0.0, 0.0};
    a.fm_nominal_hz = fm_at_residue(cfg, 2, 5);
    b.id = "impostor";
    b.position_m = {4.3, 0.0, 0.0}; // R^-4 keeps the rivals within ~1.2 dB
    b.fm_nominal_hz = fm_at_residue(cfg, 2, 7);
    scene.tags = {a, b};
    IdTable table;
    table.entries.push_back({"real", a.fm_nominal_hz});
    table.ppm_tolerance = 40000.0; // window wide enough to cover both residues

    SUBCASE("comparable strengths are flagged ambiguous") {
        const auto ests = localize_all(simulate_if_fast(scene, "r0", cfg), cfg, table);
        REQUIRE(ests.size() == 2);
        CHECK(ests[0].ambiguous);
        CHECK(ests[1].ambiguous);
    }
    SUBCASE("a decisively stronger claimant wins and the rival goes anonymous") {
        scene.tags[1].reflect_amplitude = 1.0 / 30.0;
        const auto ests = localize_all(simulate_if_fast(scene, "r0", cfg), cfg, table);
        REQUIRE(ests.size() == 2);
        int matched = 0, anonymous = 0;
        for (const auto& e : ests) {
            if (e.tag_id == "real") {
                ++matched;
                CHECK(!e.ambiguous);
                CHECK(std::abs(e.range_m - 4.0) < 2.5e-3);
            }
            if (e.tag_id.empty()) ++anonymous;
        }
        CHECK(matched == 1);
        CHECK(anonymous == 1);
    }
}

TEST_CASE("a thousand identities fit the default symbol design") {
    RadarConfig cfg;
    cfg.chirp_duration_s = 32e-6;
    cfg.sample_rate_hz = 2e6;
    cfg.num_chirps = 1025;
    cfg.validate();
    CHECK(cfg.symbol_bin_hz() == doctest::Approx(30.4878).epsilon(1e-4));

    IdTable table;
    for (int r = 1; r < cfg.num_chirps; ++r)
        table.entries.push_back({"id" + std::to_string(r), fm_at_residue(cfg, 3, r)});
    REQUIRE(table.entries.size() == 1024);

    Scene scene;
    scene.radars.push_back({.id = "r0"});
    TagSpec t1, t2;
    t1.id = "id40";
    t1.position_m = {5.0, 0.0, 0.0};
    t1.fm_nominal_hz = fm_at_residue(cfg, 3, 40);
    t2.id = "id900";
    t2.position_m = {8.0, 0.0, 0.0};
    t2.fm_nominal_hz = fm_at_residue(cfg, 3, 900);
    scene.tags = {t1, t2};

    const auto ests = localize_all(simulate_if_fast(scene, "r0", cfg), cfg, table);
    REQUIRE(ests.size() == 2);
    CHECK(ests[0].tag_id == "id40");
    CHECK(ests[1].tag_id == "id900");
    CHECK(std::abs(ests[0].range_m - 5.0) < 5e-3);
    CHECK(std::abs(ests[1].range_m - 8.0) < 5e-3);
}

TEST_CASE("conventional single-chirp ranging is quantized to c/2B") {
    const RadarConfig cfg = small_config();
    const double quantum = kSpeedOfLight / (2.0 * cfg.bandwidth_hz);
    CHECK(quantum == doctest::Approx(0.59958).epsilon(1e-4));
    Scene scene;
    scene.radars.push_back({.id = "r0"});
    scene.clutter.push_back({{7.3, 0.0, 0.0}, 1.0});
    const IqSignal sig = simulate_if_fast(scene, "r0", cfg);
    const double est = baseline_fmcw_range(sig, cfg);
    CHECK(std::abs(est - 7.3) <= 0.5 * quantum * 1.001);
}

TEST_CASE("clutter-only scenes localize to nothing") {
    const RadarConfig cfg = small_config();
    Scene scene;
    scene.radars.push_back({.id = "r0"});
    scene.clutter.push_back({{5.0, 0.0, 0.0}, 8.0});
    IdTable table;
    table.entries.push_back({"t0", fm_at_residue(cfg, 2, 5)});
    CHECK(localize_all(simulate_if_fast(scene, "r0", cfg), cfg, table).empty());
}

} // TEST_SUITE
