#include <benchmark/benchmark.h>

#include <cstdint>
#include <string>
#include <vector>

#include <hdfmcw/channel.hpp>
#include <hdfmcw/geometry.hpp>
#include <hdfmcw/localizer.hpp>
#include <hdfmcw/scene.hpp>

using namespace hdfmcw;

namespace {

// 64-sample chirps keep the symbol DFT at 64 * num_chirps points, so the
// chirp count doubles both the capture length and the residue capacity.
RadarConfig config_with_chirps(int num_chirps) {
    RadarConfig cfg;
    cfg.bandwidth_hz = 250e6;
    cfg.chirp_duration_s = 16e-6;
    cfg.sample_rate_hz = 4e6;
    cfg.num_chirps = num_chirps;
    return cfg;
}

double fm_at_residue(const RadarConfig& cfg, int k, int r) {
    return (static_cast<double>(k) * cfg.num_chirps + r) * cfg.symbol_bin_hz();
}

Scene scene_with_tags(const RadarConfig& cfg, int count) {
    Scene scene;
    scene.radars.push_back({.id = "r0"});
    scene.clutter.push_back({{3.0, 1.5, 0.0}, 20.0});
    for (int i = 0; i < count; ++i) {
        TagSpec tag;
        tag.id = "t" + std::to_string(i);
        tag.position_m = {2.0 + 0.17 * i, 0.0, 0.0};
        tag.fm_nominal_hz = fm_at_residue(cfg, 1, 3 + 2 * i);
        scene.tags.push_back(tag);
    }
    return scene;
}

} // namespace

static void BM_SimulateFast(benchmark::State& state) {
    const RadarConfig cfg = config_with_chirps(static_cast<int>(state.range(0)));
    const Scene scene = scene_with_tags(cfg, 4);
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_if_fast(scene, "r0", cfg));
    state.SetComplexityN(state.range(0) * cfg.samples_per_chirp());
}
BENCHMARK(BM_SimulateFast)->RangeMultiplier(2)->Range(64, 512)->Complexity(benchmark::oN);

static void BM_IfSpectrum(benchmark::State& state) {
    const RadarConfig cfg = config_with_chirps(static_cast<int>(state.range(0)));
    const IqSignal sig = simulate_if_fast(scene_with_tags(cfg, 4), "r0", cfg);
    for (auto _ : state)
        benchmark::DoNotOptimize(if_spectrum(sig, cfg));
    state.SetComplexityN(static_cast<std::int64_t>(sig.size()));
}
BENCHMARK(BM_IfSpectrum)->RangeMultiplier(2)->Range(64, 1024)->Complexity(benchmark::oNLogN);

static void BM_IsolateExtract(benchmark::State& state) {
    const RadarConfig cfg = config_with_chirps(256);
    const Spectrum spec =
        if_spectrum(simulate_if_fast(scene_with_tags(cfg, 1), "r0", cfg), cfg);
    const auto dets = detect_fm(spec, cfg);
    ExtractOptions opts;
    opts.pad_factor = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(extract_fr(isolate_tag(spec, dets[0]), cfg, opts));
}
BENCHMARK(BM_IsolateExtract)->Arg(32)->Arg(128)->Arg(512);

static void BM_LocalizeAll(benchmark::State& state) {
    const RadarConfig cfg = config_with_chirps(256);
    const Scene scene = scene_with_tags(cfg, static_cast<int>(state.range(0)));
    const IqSignal sig = simulate_if_fast(scene, "r0", cfg);
    IdTable table;
    for (const auto& tag : scene.tags)
        table.entries.push_back({tag.id, tag.fm_nominal_hz});
    for (auto _ : state)
        benchmark::DoNotOptimize(localize_all(sig, cfg, table));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LocalizeAll)->Arg(1)->Arg(10)->Arg(50)->Arg(100)->Complexity(benchmark::oN);

static void BM_Trilaterate(benchmark::State& state) {
    const Vec3 truth{3.1, -2.2, 1.7};
    const std::vector<Vec3> anchors{
        {0.0, 0.0, 0.0}, {10.0, 0.0, 0.0}, {0.0, 9.0, 0.0}, {4.0, 5.0, 7.0}, {-3.0, 2.0, 4.0}};
    std::vector<RangeObservation> obs;
    for (const auto& a : anchors) obs.push_back({a, (truth - a).norm()});
    for (auto _ : state)
        benchmark::DoNotOptimize(trilaterate(obs, 3));
}
BENCHMARK(BM_Trilaterate);

BENCHMARK_MAIN();
