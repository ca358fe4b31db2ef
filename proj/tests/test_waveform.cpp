#include <cmath>
#include <complex>

#include <hdfmcw/errors.hpp>
#include <hdfmcw/waveform.hpp>

#include "doctest.h"
#include "test_helpers.hpp"

using namespace hdfmcw;

TEST_SUITE("waveform") {

TEST_CASE("chirp follows the quadratic phase law at unit amplitude") {
    const RadarConfig cfg = small_config();
    const IqSignal chirp = synth_chirp(cfg);
    REQUIRE(chirp.size() == static_cast<std::size_t>(cfg.samples_per_chirp()));
    CHECK(chirp.sample_rate_hz == cfg.sample_rate_hz);
    const double s = cfg.slope();
    for (std::size_t k = 0; k < chirp.size(); ++k) {
        const double t = static_cast<double>(k) / cfg.sample_rate_hz;
        const cplx want = std::polar(1.0, kPi * s * t * t);
        CHECK(std::abs(chirp.samples[k] - want) < 1e-12);
        CHECK(std::abs(std::abs(chirp.samples[k]) - 1.0) < 1e-12);
    }
}

TEST_CASE("interrogation symbol repeats the chirp exactly") {
    const RadarConfig cfg = small_config();
    const IqSignal sym = synth_interrogation(cfg);
    const int p = cfg.samples_per_chirp();
    REQUIRE(sym.size() == static_cast<std::size_t>(cfg.symbol_samples()));
    for (std::size_t k = 0; k + p < sym.size(); ++k)
        CHECK(sym.samples[k] == sym.samples[k + p]);
    // Unit amplitude everywhere means energy equals the sample count.
    CHECK(sym.energy() == doctest::Approx(static_cast<double>(sym.size())).epsilon(1e-12));
}

TEST_CASE("interrogation refuses gapped configs") {
    RadarConfig cfg = small_config();
    cfg.interchirp_gap_s = 4e-6;
    CHECK_THROWS_AS(synth_interrogation(cfg), ConfigError);
}

TEST_CASE("split and reconstruct round-trip a gapped capture") {
    RadarConfig cfg = small_config();
    cfg.interchirp_gap_s = 4e-6; // 16 idle samples per frame
    const int p = cfg.samples_per_chirp();
    const int g = cfg.gap_samples();
    REQUIRE(g == 16);

    // Distinct marker per (chirp, sample) so any layout slip is visible.
    IqSignal capture;
    capture.sample_rate_hz = cfg.sample_rate_hz;
    capture.t0_s = 0.25;
    for (int n = 0; n < cfg.num_chirps; ++n) {
        for (int k = 0; k < p; ++k)
            capture.samples.push_back(cplx(n, k));
        for (int k = 0; k < g; ++k)
            capture.samples.push_back(cplx(-1.0, -1.0)); // idle tail
    }

    const auto frames = split_chirp_frames(capture, cfg);
    REQUIRE(frames.size() == static_cast<std::size_t>(cfg.num_chirps));
    for (int n = 0; n < cfg.num_chirps; ++n) {
        REQUIRE(frames[n].size() == static_cast<std::size_t>(p));
        CHECK(frames[n].samples.front() == cplx(n, 0));
        CHECK(frames[n].samples.back() == cplx(n, p - 1));
        const double frame_s = static_cast<double>(p + g) / cfg.sample_rate_hz;
        CHECK(frames[n].t0_s == doctest::Approx(0.25 + n * frame_s).epsilon(1e-12));
    }

    const IqSignal spliced = reconstruct_gapless(frames, cfg);
    REQUIRE(spliced.size() == static_cast<std::size_t>(cfg.symbol_samples()));
    CHECK(spliced.t0_s == 0.25);
    for (int n = 0; n < cfg.num_chirps; ++n)
        for (int k = 0; k < p; ++k)
            CHECK(spliced.samples[static_cast<std::size_t>(n) * p + k] == cplx(n, k));
}

TEST_CASE("split rejects captures of the wrong length") {
    const RadarConfig cfg = small_config();
    IqSignal capture;
    capture.sample_rate_hz = cfg.sample_rate_hz;
    capture.samples.assign(cfg.symbol_samples() - 1, cplx(1.0, 0.0));
    CHECK_THROWS_AS(split_chirp_frames(capture, cfg), StructureError);
}

TEST_CASE("reconstruct rejects frame count and frame length mismatches") {
    const RadarConfig cfg = small_config();
    std::vector<IqSignal> frames(cfg.num_chirps - 1);
    CHECK_THROWS_AS(reconstruct_gapless(frames, cfg), StructureError);

    frames.assign(cfg.num_chirps, IqSignal{});
    for (auto& f : frames) {
        f.sample_rate_hz = cfg.sample_rate_hz;
        f.samples.assign(cfg.samples_per_chirp(), cplx(0.0, 0.0));
    }
    frames[3].samples.pop_back();
    CHECK_THROWS_AS(reconstruct_gapless(frames, cfg), StructureError);
}

} // TEST_SUITE
