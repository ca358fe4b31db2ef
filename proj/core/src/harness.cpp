#include "hdfmcw/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hdfmcw/channel.hpp"
#include "hdfmcw/errors.hpp"
#include "hdfmcw/geometry.hpp"
#include "hdfmcw/waveform.hpp"

namespace hdfmcw {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

Vec3 unit(const Vec3& v) {
    const double n = v.norm();
    return {v.x / n, v.y / n, v.z / n};
}

Scenario with_overrides(Scenario sc, const RunOptions& opts) {
    if (opts.seed) {
        sc.seed = *opts.seed;
        sc.scene.rng_seed = *opts.seed;
    }
    if (opts.pad_factor) sc.pipeline.pad_factor = *opts.pad_factor;
    if (opts.refine) sc.pipeline.refine_peak = *opts.refine;
    if (opts.oracle) sc.pipeline.use_oracle = *opts.oracle;
    return sc;
}

Scenario with_sweep_value(Scenario sc, const SweepSpec& sw, double value) {
    if (sw.variable == "snr_db") {
        sc.scene.noise_power_db.reset();
        sc.scene.snr_db = value;
        return sc;
    }
    for (auto& tag : sc.scene.tags) {
        if (tag.id != sw.tag_id) continue;
        if (sw.variable == "fm_ppm_offset") {
            tag.fm_ppm_offset = value;
        } else if (sw.variable == "range_m") {
            tag.position_m = sc.scene.radar(sw.radar_id).position_m +
                             unit(sw.direction) * value;
        } else if (sw.variable == "speed_mps") {
            tag.velocity_mps = unit(sw.direction) * value;
        }
        return sc;
    }
    throw LookupError("sweep: unknown tag '" + sw.tag_id + "'");
}

Scene make_trial_scene(const Scenario& sc, int trial) {
    Scene scene = sc.scene;
    scene.rng_seed = derive_seed(sc.seed, "trial", static_cast<std::uint64_t>(trial));
    if (sc.experiment.randomize_range) {
        const auto& rr = *sc.experiment.randomize_range;
        std::mt19937_64 rng(derive_seed(sc.seed, "range", static_cast<std::uint64_t>(trial)));
        std::uniform_real_distribution<double> dist(rr.min_m, rr.max_m);
        const double r = dist(rng);
        for (auto& tag : scene.tags)
            if (tag.id == rr.tag_id)
                tag.position_m =
                    scene.radar(rr.radar_id).position_m + unit(rr.direction) * r;
    }
    return scene;
}

LocalizeOptions localize_options(const PipelineSpec& p) {
    LocalizeOptions o;
    o.detect.min_snr_db = p.min_snr_db;
    o.extract.pad_factor = p.pad_factor;
    o.extract.refine_peak = p.refine_peak;
    o.reject_harmonics = p.reject_harmonics;
    o.refine_fm_subbin = p.refine_fm_subbin;
    o.calibration_offset_m = p.calibration_m;
    return o;
}

IqSignal simulate_radar(const Scene& scene, const std::string& radar_id,
                        const RadarConfig& cfg, const PipelineSpec& p) {
    if (cfg.interchirp_gap_s > 0.0 || p.use_oracle) {
        IqSignal capture = simulate_rf_oracle(scene, radar_id, cfg);
        if (cfg.interchirp_gap_s > 0.0) {
            const auto frames = split_chirp_frames(capture, cfg);
            return reconstruct_gapless(frames, cfg);
        }
        return capture;
    }
    return simulate_if_fast(scene, radar_id, cfg);
}

struct ResultRow {
    int trial = 0;
    std::string radar_id;
    std::string tag_id;
    double true_range_m = 0.0;
    std::optional<double> est_range_m;
    std::optional<double> error_m;
    std::optional<double> snr_db;
    bool detected = false;
};

struct PositionRow {
    int trial = 0;
    std::string tag_id;
    Vec3 pos;
    double residual_m = 0.0;
    double error_m = 0.0;
};

struct TrialData {
    std::vector<ResultRow> rows;
    std::vector<PositionRow> positions;
    std::size_t ghosts = 0;
    std::string failure; // empty = ok
    double simulate_s = 0.0, localize_s = 0.0, solve_s = 0.0;
};

Vec3 world_from_aoa(const RadarNode& radar, double range_m, double angle_rad) {
    // local frame: x = broadside (zero angle), y = along the array axis
    const Vec3 u = unit(radar.array_axis);
    const Vec3 v{-u.y, u.x, 0.0};
    const Vec3 local = aoa_localize(range_m, angle_rad);
    return radar.position_m + v * local.x + u * local.y;
}

TrialData run_one_trial(const Scenario& sc, int trial) {
    TrialData data;
    try {
        const Scene scene = make_trial_scene(sc, trial);
        const RadarConfig& cfg = sc.radar_config;
        const auto opts = localize_options(sc.pipeline);
        const int dims = sc.pipeline.solve.dims;

        // per-tag per-radar matched ranges feed the position solver
        std::map<std::string, std::vector<RangeObservation>> obs_by_tag;
        std::vector<std::vector<IqSignal>> array_store;

        for (const auto& radar : scene.radars) {
            auto t0 = clock_type::now();
            std::vector<IqSignal> sigs;
            const bool want_aoa =
                dims == 2 && scene.radars.size() == 1 && radar.rx_antennas > 1;
            if (want_aoa) {
                sigs = simulate_if_fast_array(scene, radar.id, cfg);
            } else {
                sigs.push_back(simulate_radar(scene, radar.id, cfg, sc.pipeline));
            }
            data.simulate_s += seconds_since(t0);

            t0 = clock_type::now();
            const auto estimates = localize_all(sigs[0], cfg, sc.id_table, opts);
            data.localize_s += seconds_since(t0);

            std::map<std::string, const RangeEstimate*> by_id;
            for (const auto& e : estimates) {
                if (e.tag_id.empty()) {
                    ++data.ghosts;
                    continue;
                }
                if (!e.ambiguous) by_id[e.tag_id] = &e;
            }

            for (const auto& entry : sc.id_table.entries) {
                ResultRow row;
                row.trial = trial;
                row.radar_id = radar.id;
                row.tag_id = entry.tag_id;
                row.true_range_m =
                    range_at(scene, radar.id, TargetRef::make_tag(entry.tag_id), 0.0);
                auto it = by_id.find(entry.tag_id);
                if (it != by_id.end()) {
                    row.detected = true;
                    row.est_range_m = it->second->range_m;
                    row.error_m = std::abs(*row.est_range_m - row.true_range_m);
                    row.snr_db = it->second->snr_db;
                    obs_by_tag[entry.tag_id].push_back(
                        {radar.position_m, it->second->range_m});
                }
                data.rows.push_back(std::move(row));
            }

            if (want_aoa && !estimates.empty()) {
                array_store.push_back(std::move(sigs));
                auto t1 = clock_type::now();
                const auto& stored = array_store.back();
                std::span<const IqSignal> span(stored.data(), stored.size());
                for (const auto& e : estimates) {
                    if (e.tag_id.empty() || e.ambiguous) continue;
                    TagDetection det;
                    det.offset_bins = e.offset_bins;
                    det.offset_hz = e.fm_detected_hz;
                    det.snr_db = e.snr_db;
                    try {
                        const auto aoa =
                            estimate_aoa(span, cfg, det, radar.antenna_spacing_m);
                        const Vec3 p = world_from_aoa(radar, e.range_m, aoa.angle_rad);
                        const Vec3 truth = scene.tag(e.tag_id).position_m;
                        PositionRow pr;
                        pr.trial = trial;
                        pr.tag_id = e.tag_id;
                        pr.pos = p;
                        pr.residual_m = 0.0;
                        pr.error_m = (Vec3{p.x - truth.x, p.y - truth.y, 0.0}).norm();
                        data.positions.push_back(std::move(pr));
                    } catch (const Error& err) {
                        data.failure += std::string("aoa '" ) + e.tag_id + "': " + err.what() + "; ";
                    }
                }
                data.solve_s += seconds_since(t1);
            }
        }

        if (dims == 2 || dims == 3) {
            const bool aoa_mode =
                dims == 2 && scene.radars.size() == 1 &&
                scene.radars[0].rx_antennas > 1;
            if (!aoa_mode) {
                auto t0 = clock_type::now();
                for (const auto& entry : sc.id_table.entries) {
                    const auto it = obs_by_tag.find(entry.tag_id);
                    if (it == obs_by_tag.end() ||
                        static_cast<int>(it->second.size()) < dims)
                        continue;
                    TrilatOptions topt;
                    topt.initial_guess = sc.pipeline.solve.initial_guess;
                    try {
                        const auto est = trilaterate(it->second, dims, topt);
                        const Vec3 truth = scene.tag(entry.tag_id).position_m;
                        Vec3 delta = est.position_m - truth;
                        if (dims == 2) delta.z = 0.0;
                        PositionRow pr;
                        pr.trial = trial;
                        pr.tag_id = entry.tag_id;
                        pr.pos = est.position_m;
                        pr.residual_m = est.residual_m;
                        pr.error_m = delta.norm();
                        data.positions.push_back(std::move(pr));
                    } catch (const Error& err) {
                        data.failure += std::string("solve '") + entry.tag_id + "': " +
                                        err.what() + "; ";
                    }
                }
                data.solve_s += seconds_since(t0);
            }
        }
    } catch (const std::exception& e) {
        data.failure = e.what();
    }
    return data;
}

void write_results_csv(const fs::path& file, const std::vector<TrialData>& trials) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write '" + file.string() + "'");
    out << "trial,tag_id,true_range_m,est_range_m,error_m,snr_db,detected\n";
    for (const auto& t : trials)
        for (const auto& r : t.rows) {
            out << r.trial << ',' << r.tag_id << ',' << fmt(r.true_range_m) << ',';
            if (r.est_range_m) out << fmt(*r.est_range_m);
            out << ',';
            if (r.error_m) out << fmt(*r.error_m);
            out << ',';
            if (r.snr_db) out << fmt(*r.snr_db);
            out << ',' << (r.detected ? 1 : 0) << '\n';
        }
}

void write_positions_csv(const fs::path& file, const std::vector<TrialData>& trials) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write '" + file.string() + "'");
    out << "trial,tag_id,x,y,z,residual_m,error_m\n";
    for (const auto& t : trials)
        for (const auto& p : t.positions)
            out << p.trial << ',' << p.tag_id << ',' << fmt(p.pos.x) << ','
                << fmt(p.pos.y) << ',' << fmt(p.pos.z) << ',' << fmt(p.residual_m)
                << ',' << fmt(p.error_m) << '\n';
}

json stats_to_json(const SummaryStats& s) {
    return {{"count", s.count}, {"median", s.median}, {"p10", s.p10},
            {"p25", s.p25},     {"p75", s.p75},       {"p90", s.p90},
            {"mean", s.mean},   {"max", s.max}};
}

MetricsReport build_report(const std::vector<TrialData>& trials) {
    MetricsReport rep;
    std::vector<double> errors;
    std::map<std::string, std::vector<double>> per_tag;
    std::size_t detected = 0;
    std::vector<double> pos_errors;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& t = trials[i];
        if (!t.failure.empty())
            rep.trial_failures.push_back("trial " + std::to_string(i) + ": " + t.failure);
        rep.ghost_detections += t.ghosts;
        for (const auto& r : t.rows) {
            ++rep.rows;
            if (r.detected) {
                ++detected;
                errors.push_back(*r.error_m);
                per_tag[r.tag_id].push_back(*r.error_m);
            }
        }
        for (const auto& p : t.positions) pos_errors.push_back(p.error_m);
        rep.timings.simulate_s += t.simulate_s;
        rep.timings.localize_s += t.localize_s;
        rep.timings.solve_s += t.solve_s;
    }
    rep.detection_rate =
        rep.rows == 0 ? 0.0 : static_cast<double>(detected) / static_cast<double>(rep.rows);
    rep.range_error = summarize(errors);
    for (auto& [id, v] : per_tag) rep.per_tag_error[id] = summarize(v);
    std::sort(errors.begin(), errors.end());
    rep.cdf_error_m = std::move(errors);
    if (!pos_errors.empty()) rep.position_error = summarize(pos_errors);
    return rep;
}

void write_metrics_json(const fs::path& file, const MetricsReport& rep) {
    json j;
    j["rows"] = rep.rows;
    j["detection_rate"] = rep.detection_rate;
    j["range_error_m"] = stats_to_json(rep.range_error);
    json per_tag = json::object();
    for (const auto& [id, s] : rep.per_tag_error) per_tag[id] = stats_to_json(s);
    j["per_tag_error_m"] = per_tag;
    j["cdf_error_m"] = rep.cdf_error_m;
    if (rep.position_error) j["position_error_m"] = stats_to_json(*rep.position_error);
    j["ghost_detections"] = rep.ghost_detections;
    j["trial_failures"] = rep.trial_failures;
    std::ofstream out(file);
    if (!out) throw IoError("cannot write '" + file.string() + "'");
    out << j.dump(2) << "\n";
}

void write_timings_json(const fs::path& file, const StageTimings& t) {
    json j = {{"simulate_s", t.simulate_s},
              {"localize_s", t.localize_s},
              {"solve_s", t.solve_s},
              {"total_s", t.total_s}};
    std::ofstream out(file);
    if (!out) throw IoError("cannot write '" + file.string() + "'");
    out << j.dump(2) << "\n";
}

void write_spectrum_csv(const fs::path& file, const Spectrum& spec) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write '" + file.string() + "'");
    out << "bin_index,freq_hz,mag_db\n";
    for (std::size_t i = 0; i < spec.bins.size(); ++i) {
        const double mag2 = std::norm(spec.bins[i]);
        const double db = mag2 > 0 ? 10.0 * std::log10(mag2) : -300.0;
        out << i << ',' << fmt(i * spec.bin_spacing_hz) << ',' << fmt(db) << '\n';
    }
}

void write_envelope_csv(const fs::path& file, const std::vector<cplx>& padded,
                        double sample_rate_hz) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write '" + file.string() + "'");
    out << "bin_index,freq_hz,mag_db\n";
    const double df = sample_rate_hz / static_cast<double>(padded.size());
    for (std::size_t i = 0; i < padded.size(); ++i) {
        const double mag2 = std::norm(padded[i]);
        const double db = mag2 > 0 ? 10.0 * std::log10(mag2) : -300.0;
        out << i << ',' << fmt(i * df) << ',' << fmt(db) << '\n';
    }
}

void write_dumps(const Scenario& sc, const fs::path& out_dir) {
    const auto& flags = sc.pipeline.dumps;
    if (!flags.spectrum && !flags.envelopes && !flags.iq) return;
    fs::create_directories(out_dir / "dumps");
    const Scene scene = make_trial_scene(sc, 0);
    const auto opts = localize_options(sc.pipeline);
    for (const auto& radar : scene.radars) {
        const IqSignal sig = simulate_radar(scene, radar.id, sc.radar_config, sc.pipeline);
        if (flags.iq)
            write_iq_dump(sig, sc.radar_config,
                          (out_dir / "dumps" / ("capture_" + radar.id)).string());
        if (!flags.spectrum && !flags.envelopes) continue;
        const Spectrum spec = if_spectrum(sig, sc.radar_config);
        if (flags.spectrum)
            write_spectrum_csv(out_dir / "dumps" / ("spectrum_" + radar.id + ".csv"), spec);
        if (flags.envelopes) {
            const auto estimates = localize_all(sig, sc.radar_config, sc.id_table, opts);
            for (const auto& e : estimates) {
                TagDetection det;
                det.offset_bins = e.offset_bins;
                const Spectrum clean = isolate_tag(spec, det);
                const auto padded =
                    padded_window_spectrum(clean, sc.radar_config, sc.pipeline.pad_factor);
                const std::string label =
                    e.tag_id.empty() ? "residue" + std::to_string(e.offset_bins) : e.tag_id;
                write_envelope_csv(
                    out_dir / "dumps" / ("envelope_" + radar.id + "_" + label + ".csv"),
                    padded, sc.radar_config.sample_rate_hz);
            }
        }
    }
}

std::vector<TrialData> run_trials(const Scenario& sc, int n_threads) {
    const int trials = sc.experiment.trials;
    std::vector<TrialData> results(trials);
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    const int pool = std::max(1, std::min(n_threads > 0 ? n_threads : hw, trials));
    if (pool == 1) {
        for (int i = 0; i < trials; ++i) results[i] = run_one_trial(sc, i);
        return results;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(pool);
    for (int w = 0; w < pool; ++w)
        workers.emplace_back([&] {
            for (int i = next.fetch_add(1); i < trials; i = next.fetch_add(1))
                results[i] = run_one_trial(sc, i);
        });
    for (auto& w : workers) w.join();
    return results;
}

MetricsReport run_single(const Scenario& sc, const fs::path& out_dir,
                         const RunOptions& opts) {
    const auto t0 = clock_type::now();
    fs::create_directories(out_dir);
    auto trials = run_trials(sc, opts.threads);
    MetricsReport rep = build_report(trials);
    write_results_csv(out_dir / "results.csv", trials);
    bool any_positions = false;
    for (const auto& t : trials)
        if (!t.positions.empty()) any_positions = true;
    if (any_positions) write_positions_csv(out_dir / "eval_positions.csv", trials);
    write_dumps(sc, out_dir);
    rep.timings.total_s = seconds_since(t0);
    write_metrics_json(out_dir / "metrics.json", rep);
    write_timings_json(out_dir / "timings.json", rep.timings);
    return rep;
}

} // namespace

MetricsReport run_scenario(const Scenario& scenario, const fs::path& out_dir,
                           const RunOptions& opts) {
    const Scenario sc = with_overrides(scenario, opts);
    if (!sc.experiment.sweep) return run_single(sc, out_dir, opts);

    const auto t0 = clock_type::now();
    fs::create_directories(out_dir);
    const auto& sw = *sc.experiment.sweep;
    std::vector<TrialData> all;
    std::ofstream summary(out_dir / "sweep_summary.csv");
    if (!summary) throw IoError("cannot write sweep_summary.csv");
    summary << "value,count,median_error_m,p10,p25,p75,p90,detection_rate\n";
    MetricsReport merged;
    std::vector<double> all_errors;
    for (std::size_t k = 0; k < sw.values.size(); ++k) {
        Scenario sub = with_sweep_value(sc, sw, sw.values[k]);
        sub.experiment.sweep.reset();
        const MetricsReport r =
            run_single(sub, out_dir / ("sweep_" + std::to_string(k)), opts);
        summary << fmt(sw.values[k]) << ',' << r.range_error.count << ','
                << fmt(r.range_error.median) << ',' << fmt(r.range_error.p10) << ','
                << fmt(r.range_error.p25) << ',' << fmt(r.range_error.p75) << ','
                << fmt(r.range_error.p90) << ',' << fmt(r.detection_rate) << '\n';
        merged.rows += r.rows;
        merged.detection_rate += r.detection_rate * static_cast<double>(r.rows);
        merged.ghost_detections += r.ghost_detections;
        for (const auto& f : r.trial_failures)
            merged.trial_failures.push_back("value " + fmt(sw.values[k]) + ": " + f);
        all_errors.insert(all_errors.end(), r.cdf_error_m.begin(), r.cdf_error_m.end());
        merged.timings.simulate_s += r.timings.simulate_s;
        merged.timings.localize_s += r.timings.localize_s;
        merged.timings.solve_s += r.timings.solve_s;
    }
    if (merged.rows > 0) merged.detection_rate /= static_cast<double>(merged.rows);
    merged.range_error = summarize(all_errors);
    std::sort(all_errors.begin(), all_errors.end());
    merged.cdf_error_m = std::move(all_errors);
    merged.timings.total_s = seconds_since(t0);
    write_metrics_json(out_dir / "metrics.json", merged);
    write_timings_json(out_dir / "timings.json", merged.timings);
    return merged;
}

BaselineReport compare_baseline(const Scenario& scenario, const fs::path& out_dir,
                                const RunOptions& opts) {
    const Scenario sc = with_overrides(scenario, opts);
    if (sc.scene.tags.size() != 1)
        throw ConfigError("compare_baseline: needs a scene with exactly one tag");
    fs::create_directories(out_dir);

    std::vector<double> err_ref, err_noref, err_base;
    std::ofstream rows(out_dir / "baseline_trials.csv");
    if (!rows) throw IoError("cannot write baseline_trials.csv");
    rows << "trial,true_range_m,enhanced_m,enhanced_norefine_m,baseline_m\n";

    const std::string tag_id = sc.scene.tags[0].id;
    for (int trial = 0; trial < sc.experiment.trials; ++trial) {
        const Scene scene = make_trial_scene(sc, trial);
        const auto& radar = scene.radars.front();
        const double truth = range_at(scene, radar.id, TargetRef::make_tag(tag_id), 0.0);

        const IqSignal sig = simulate_radar(scene, radar.id, sc.radar_config, sc.pipeline);
        auto lopts = localize_options(sc.pipeline);
        lopts.extract.refine_peak = true;
        const auto with_refine = localize_all(sig, sc.radar_config, sc.id_table, lopts);
        lopts.extract.refine_peak = false;
        const auto without = localize_all(sig, sc.radar_config, sc.id_table, lopts);

        // conventional-receiver twin: same geometry, tag not modulated
        Scene twin = scene;
        for (const auto& t : twin.tags)
            twin.clutter.push_back({t.position_m, t.reflect_amplitude});
        twin.tags.clear();
        twin.multipath.clear();
        const IqSignal base_sig =
            simulate_radar(twin, radar.id, sc.radar_config, sc.pipeline);
        const double base_range = baseline_fmcw_range(base_sig, sc.radar_config);

        auto find_est = [&](const std::vector<RangeEstimate>& v) -> const RangeEstimate* {
            for (const auto& e : v)
                if (e.tag_id == tag_id) return &e;
            return nullptr;
        };
        const auto* er = find_est(with_refine);
        const auto* en = find_est(without);
        if (!er || !en) continue; // missed detection: skip the pair
        err_ref.push_back(std::abs(er->range_m - truth));
        err_noref.push_back(std::abs(en->range_m - truth));
        err_base.push_back(std::abs(base_range - truth));
        rows << trial << ',' << fmt(truth) << ',' << fmt(er->range_m) << ','
             << fmt(en->range_m) << ',' << fmt(base_range) << '\n';
    }
    if (err_ref.empty())
        throw NoSignalError("compare_baseline: the tag was never detected");

    BaselineReport rep;
    rep.trials = static_cast<int>(err_ref.size());
    rep.enhanced_median_m = percentile(err_ref, 50.0);
    rep.enhanced_norefine_median_m = percentile(err_noref, 50.0);
    rep.baseline_median_m = percentile(err_base, 50.0);
    rep.ratio_refined = rep.baseline_median_m / rep.enhanced_median_m;
    rep.ratio_norefine = rep.baseline_median_m / rep.enhanced_norefine_median_m;

    json j = {{"trials", rep.trials},
              {"enhanced_median_m", rep.enhanced_median_m},
              {"enhanced_norefine_median_m", rep.enhanced_norefine_median_m},
              {"baseline_median_m", rep.baseline_median_m},
              {"ratio_refined", rep.ratio_refined},
              {"ratio_norefine", rep.ratio_norefine}};
    std::ofstream out(out_dir / "baseline.json");
    out << j.dump(2) << "\n";
    return rep;
}

void run_simulate(const Scenario& scenario, const fs::path& out_dir,
                  const RunOptions& opts) {
    const Scenario sc = with_overrides(scenario, opts);
    fs::create_directories(out_dir);
    const Scene scene = make_trial_scene(sc, 0);
    for (const auto& radar : scene.radars) {
        const IqSignal sig = simulate_radar(scene, radar.id, sc.radar_config, sc.pipeline);
        write_iq_dump(sig, sc.radar_config, (out_dir / ("capture_" + radar.id)).string());
    }
}

void run_localize(const Scenario& scenario, const fs::path& out_dir,
                  const RunOptions& opts) {
    const Scenario sc = with_overrides(scenario, opts);
    fs::create_directories(out_dir);
    const Scene scene = make_trial_scene(sc, 0);
    const auto lopts = localize_options(sc.pipeline);
    std::ofstream out(out_dir / "ranges.csv");
    if (!out) throw IoError("cannot write ranges.csv");
    out << "radar_id,tag_id,offset_bins,fm_detected_hz,fr_hz,range_m,snr_db,ambiguous\n";
    for (const auto& radar : scene.radars) {
        const IqSignal sig = simulate_radar(scene, radar.id, sc.radar_config, sc.pipeline);
        const auto estimates = localize_all(sig, sc.radar_config, sc.id_table, lopts);
        for (const auto& e : estimates)
            out << radar.id << ',' << e.tag_id << ',' << e.offset_bins << ','
                << fmt(e.fm_detected_hz) << ',' << fmt(e.fr_hz) << ','
                << fmt(e.range_m) << ',' << fmt(e.snr_db) << ','
                << (e.ambiguous ? 1 : 0) << '\n';
    }
    write_dumps(sc, out_dir);
}

void run_track(const Scenario& scenario, const fs::path& out_dir,
               const RunOptions& opts) {
    const Scenario sc = with_overrides(scenario, opts);
    if (sc.pipeline.track_interval_chirps < 1)
        throw ConfigError("track: pipeline.track_interval_chirps must be >= 1");
    fs::create_directories(out_dir / "tracks");
    const Scene scene = make_trial_scene(sc, 0);
    const auto lopts = localize_options(sc.pipeline);
    json summary = json::array();
    for (std::size_t ri = 0; ri < scene.radars.size(); ++ri) {
        const auto& radar = scene.radars[ri];
        const IqSignal sig = simulate_radar(scene, radar.id, sc.radar_config, sc.pipeline);
        const auto estimates = localize_all(sig, sc.radar_config, sc.id_table, lopts);

        double jitter = 0.0;
        if (radar.timestamp_jitter_s > 0.0) {
            std::mt19937_64 rng(derive_seed(sc.seed, "jitter", ri));
            std::uniform_real_distribution<double> dist(-radar.timestamp_jitter_s,
                                                        radar.timestamp_jitter_s);
            jitter = dist(rng);
        }

        for (const auto& e : estimates) {
            if (e.tag_id.empty() || e.ambiguous) continue;
            TagDetection det;
            det.offset_bins = e.offset_bins;
            det.offset_hz = e.fm_detected_hz;
            det.snr_db = e.snr_db;
            DispersionOptions dopts;
            dopts.cluster_halfwidth_bins = sc.pipeline.cluster_halfwidth_bins;
            const double disp = dispersion_hz(sig, sc.radar_config, det, dopts);
            const bool mobile = classify_mobile(disp, sc.pipeline.mobile_threshold_hz);

            TrackOptions topts;
            topts.extract.pad_factor = sc.pipeline.pad_factor;
            topts.extract.refine_peak = sc.pipeline.refine_peak;
            topts.tag_id = e.tag_id;
            topts.cluster_halfwidth_bins = sc.pipeline.cluster_halfwidth_bins;
            topts.timestamp_offset_s = jitter;
            for (const auto& entry : sc.id_table.entries)
                if (entry.tag_id == e.tag_id) topts.fm_nominal_hz = entry.fm_hz;
            const Track trk = track(sig, sc.radar_config, det,
                                    sc.pipeline.track_interval_chirps, topts);

            const fs::path file =
                out_dir / "tracks" / ("track_" + radar.id + "_" + e.tag_id + ".csv");
            std::ofstream tf(file);
            if (!tf) throw IoError("cannot write '" + file.string() + "'");
            tf << "t_s,range_m,snr_db\n";
            for (const auto& s : trk.samples)
                tf << fmt(s.t_s) << ',' << fmt(s.range_m) << ',' << fmt(s.snr_db) << '\n';

            // least-squares slope = signed radial speed
            double speed = 0.0;
            if (trk.samples.size() >= 2) {
                double st = 0, sr = 0, stt = 0, str = 0;
                const auto n = static_cast<double>(trk.samples.size());
                for (const auto& s : trk.samples) {
                    st += s.t_s;
                    sr += s.range_m;
                }
                st /= n;
                sr /= n;
                for (const auto& s : trk.samples) {
                    stt += (s.t_s - st) * (s.t_s - st);
                    str += (s.t_s - st) * (s.range_m - sr);
                }
                if (stt > 0) speed = str / stt;
            }
            const double frame_s =
                sc.radar_config.chirp_duration_s + sc.radar_config.interchirp_gap_s;
            summary.push_back(
                {{"radar_id", radar.id},
                 {"tag_id", e.tag_id},
                 {"dispersion_hz", disp},
                 {"mobile", mobile},
                 {"update_rate_hz", 1.0 / (sc.pipeline.track_interval_chirps * frame_s)},
                 {"radial_speed_mps", speed},
                 {"samples", trk.samples.size()}});
        }
    }
    std::ofstream out(out_dir / "track_summary.json");
    if (!out) throw IoError("cannot write track_summary.json");
    out << summary.dump(2) << "\n";
}

void run_solve(const Scenario& scenario, const fs::path& out_dir,
               const RunOptions& opts) {
    Scenario sc = with_overrides(scenario, opts);
    if (sc.pipeline.solve.dims == 0)
        sc.pipeline.solve.dims = sc.scene.radars.size() >= 3 ? 3 : 2;
    sc.experiment.trials = 1;
    fs::create_directories(out_dir);
    const auto trial = run_one_trial(sc, 0);
    if (!trial.failure.empty())
        std::cerr << "solve: partial failure: " << trial.failure << "\n";
    std::ofstream out(out_dir / "positions.csv");
    if (!out) throw IoError("cannot write positions.csv");
    out << "tag_id,x,y,z,residual_m\n";
    for (const auto& p : trial.positions)
        out << p.tag_id << ',' << fmt(p.pos.x) << ',' << fmt(p.pos.y) << ','
            << fmt(p.pos.z) << ',' << fmt(p.residual_m) << '\n';
}

// ---------------------------------------------------------------------------
// plot data
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open '" + file.string() + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    return rows;
}

void copy_matching(const fs::path& dir, const std::string& prefix,
                   const fs::path& out_dir, const std::string& kind) {
    bool any = false;
    if (fs::exists(dir))
        for (const auto& e : fs::directory_iterator(dir)) {
            const std::string name = e.path().filename().string();
            if (name.rfind(prefix, 0) == 0) {
                fs::create_directories(out_dir);
                fs::copy_file(e.path(), out_dir / name,
                              fs::copy_options::overwrite_existing);
                any = true;
            }
        }
    if (!any)
        throw UsageError("plotdata " + kind + ": no " + prefix +
                         "* files in the run directory (enable the matching dump "
                         "or verb first)");
}

} // namespace

void emit_plot_data(const fs::path& run_dir, const std::string& kind,
                    const fs::path& out_dir) {
    if (kind == "spectrum") {
        copy_matching(run_dir / "dumps", "spectrum_", out_dir, kind);
        return;
    }
    if (kind == "sinc") {
        copy_matching(run_dir / "dumps", "envelope_", out_dir, kind);
        return;
    }
    if (kind == "track") {
        copy_matching(run_dir / "tracks", "track_", out_dir, kind);
        return;
    }
    if (kind == "cdf") {
        const auto rows = read_csv(run_dir / "results.csv");
        std::vector<double> errors;
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].size() >= 7 && rows[i][6] == "1" && !rows[i][4].empty())
                errors.push_back(std::stod(rows[i][4]));
        if (errors.empty())
            throw UsageError("plotdata cdf: results.csv holds no detected rows");
        std::sort(errors.begin(), errors.end());
        fs::create_directories(out_dir);
        std::ofstream out(out_dir / "cdf.csv");
        out << "error_m,fraction\n";
        for (std::size_t i = 0; i < errors.size(); ++i)
            out << fmt(errors[i]) << ','
                << fmt(static_cast<double>(i + 1) / static_cast<double>(errors.size()))
                << '\n';
        return;
    }
    if (kind == "box") {
        fs::create_directories(out_dir);
        std::ofstream out(out_dir / "box.csv");
        out << "group,p10,p25,p50,p75,p90\n";
        if (fs::exists(run_dir / "sweep_summary.csv")) {
            const auto rows = read_csv(run_dir / "sweep_summary.csv");
            for (std::size_t i = 1; i < rows.size(); ++i)
                if (rows[i].size() >= 8)
                    out << rows[i][0] << ',' << rows[i][3] << ',' << rows[i][4] << ','
                        << rows[i][2] << ',' << rows[i][5] << ',' << rows[i][6] << '\n';
            return;
        }
        const auto rows = read_csv(run_dir / "results.csv");
        std::map<std::string, std::vector<double>> groups;
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].size() >= 7 && rows[i][6] == "1" && !rows[i][4].empty())
                groups[rows[i][1]].push_back(std::stod(rows[i][4]));
        if (groups.empty())
            throw UsageError("plotdata box: results.csv holds no detected rows");
        for (const auto& [id, v] : groups) {
            const auto s = summarize(v);
            out << id << ',' << fmt(s.p10) << ',' << fmt(s.p25) << ',' << fmt(s.median)
                << ',' << fmt(s.p75) << ',' << fmt(s.p90) << '\n';
        }
        return;
    }
    throw UsageError("plotdata: unknown kind '" + kind +
                     "' (spectrum, sinc, cdf, box, track)");
}

} // namespace hdfmcw
