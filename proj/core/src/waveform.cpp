#include "hdfmcw/waveform.hpp"

#include <cmath>
#include <string>

#include "hdfmcw/errors.hpp"

namespace hdfmcw {

IqSignal synth_chirp(const RadarConfig& cfg) {
    cfg.validate();
    const int p = cfg.samples_per_chirp();
    const double s = cfg.slope();
    const double fs = cfg.sample_rate_hz;
    IqSignal out;
    out.sample_rate_hz = fs;
    out.samples.resize(p);
    for (int k = 0; k < p; ++k) {
        const double t = static_cast<double>(k) / fs;
        out.samples[k] = std::polar(1.0, kPi * s * t * t);
    }
    return out;
}

IqSignal synth_interrogation(const RadarConfig& cfg) {
    cfg.validate();
    if (cfg.interchirp_gap_s != 0.0)
        throw ConfigError(
            "synth_interrogation: the canonical symbol has no inter-chirp gap "
            "(interchirp_gap_s must be 0)");
    IqSignal chirp = synth_chirp(cfg);
    const int p = cfg.samples_per_chirp();
    IqSignal out;
    out.sample_rate_hz = cfg.sample_rate_hz;
    out.samples.resize(cfg.symbol_samples());
    for (int n = 0; n < cfg.num_chirps; ++n)
        std::copy(chirp.samples.begin(), chirp.samples.end(),
                  out.samples.begin() + static_cast<std::ptrdiff_t>(n) * p);
    return out;
}

std::vector<IqSignal> split_chirp_frames(const IqSignal& capture, const RadarConfig& cfg) {
    cfg.validate();
    capture.validate();
    const int p = cfg.samples_per_chirp();
    const int g = cfg.gap_samples();
    const std::int64_t frame = p + g;
    const std::int64_t expect = frame * cfg.num_chirps;
    if (static_cast<std::int64_t>(capture.size()) != expect)
        throw StructureError(
            "split_chirp_frames: capture holds " + std::to_string(capture.size()) +
            " samples, expected num_chirps * (samples_per_chirp + gap) = " +
            std::to_string(expect));
    std::vector<IqSignal> frames(cfg.num_chirps);
    for (int n = 0; n < cfg.num_chirps; ++n) {
        auto first = capture.samples.begin() + static_cast<std::ptrdiff_t>(n) * frame;
        frames[n].samples.assign(first, first + p);
        frames[n].sample_rate_hz = capture.sample_rate_hz;
        frames[n].t0_s = capture.t0_s + static_cast<double>(n) * frame / capture.sample_rate_hz;
    }
    return frames;
}

IqSignal reconstruct_gapless(std::span<const IqSignal> frames, const RadarConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(frames.size()) != cfg.num_chirps)
        throw StructureError(
            "reconstruct_gapless: got " + std::to_string(frames.size()) +
            " frames, config expects " + std::to_string(cfg.num_chirps));
    const int p = cfg.samples_per_chirp();
    IqSignal out;
    out.sample_rate_hz = cfg.sample_rate_hz;
    out.t0_s = frames.empty() ? 0.0 : frames[0].t0_s;
    out.samples.resize(cfg.symbol_samples());
    for (int n = 0; n < cfg.num_chirps; ++n) {
        if (static_cast<int>(frames[n].size()) != p)
            throw StructureError(
                "reconstruct_gapless: frame " + std::to_string(n) + " holds " +
                std::to_string(frames[n].size()) + " samples, expected " + std::to_string(p));
        std::copy(frames[n].samples.begin(), frames[n].samples.end(),
                  out.samples.begin() + static_cast<std::ptrdiff_t>(n) * p);
    }
    return out;
}

} // namespace hdfmcw
