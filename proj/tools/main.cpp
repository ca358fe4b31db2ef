#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hdfmcw/errors.hpp"
#include "hdfmcw/harness.hpp"
#include "hdfmcw/scenario.hpp"

namespace fs = std::filesystem;
using namespace hdfmcw;

namespace {

struct GlobalArgs {
    std::string scenario_file;
    std::string out_dir = "run";
    RunOptions opts;
};

// Every scenario-driven verb shares the same knobs; the scenario file holds
// the defaults and these flags override it for one invocation.
void add_common(CLI::App* cmd, GlobalArgs& args) {
    cmd->add_option("scenario", args.scenario_file, "Scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("-o,--out", args.out_dir, "Output directory")
        ->capture_default_str();
    cmd->add_option("--seed", [&args](const CLI::results_t& r) {
        args.opts.seed = std::stoull(r[0]);
        return true;
    }, "Override the scenario seed");
    cmd->add_option("--pad-factor", [&args](const CLI::results_t& r) {
        args.opts.pad_factor = std::stoi(r[0]);
        return true;
    }, "Override the zero-padding factor");
    cmd->add_flag("--oracle", [&args](std::int64_t) { args.opts.oracle = true; },
                  "Simulate with the RF mixing oracle instead of the fast IF path");
    cmd->add_flag("--no-refine", [&args](std::int64_t) { args.opts.refine = false; },
                  "Disable parabolic peak refinement");
    cmd->add_option("--threads", args.opts.threads,
                    "Worker threads for trials (0 = hardware concurrency)");
}

void print_report(const MetricsReport& rep) {
    std::printf("rows: %zu  detection_rate: %.4f  ghosts: %zu  failures: %zu\n",
                rep.rows, rep.detection_rate, rep.ghost_detections,
                rep.trial_failures.size());
    if (rep.range_error.count > 0)
        std::printf("range error [m]: median %.6g  p25 %.6g  p75 %.6g  max %.6g\n",
                    rep.range_error.median, rep.range_error.p25, rep.range_error.p75,
                    rep.range_error.max);
    if (rep.position_error)
        std::printf("position error [m]: median %.6g  p90 %.6g\n",
                    rep.position_error->median, rep.position_error->p90);
    for (const auto& f : rep.trial_failures) std::fprintf(stderr, "  %s\n", f.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"HD-FMCW backscatter-tag localization toolkit"};
    app.require_subcommand(1);

    GlobalArgs sim, loc, trk, slv, evl, swp;
    bool baseline = false;
    std::string plot_run_dir, plot_kind, plot_out = "plot";

    add_common(app.add_subcommand("simulate",
                                  "Synthesize captures and write raw I/Q dumps"),
               sim);
    add_common(app.add_subcommand("localize",
                                  "One capture per radar: detect tags and report ranges"),
               loc);
    add_common(app.add_subcommand(
                   "track", "Classify mobility and export per-tag range tracks"),
               trk);
    add_common(app.add_subcommand("solve",
                                  "Solve tag positions from multi-radar ranges or AoA"),
               slv);
    auto* eval_cmd = app.add_subcommand(
        "eval", "Monte-Carlo evaluation: results.csv, metrics.json, dumps");
    add_common(eval_cmd, evl);
    eval_cmd->add_flag("--baseline", baseline,
                       "Paired comparison against single-chirp FMCW instead");
    add_common(app.add_subcommand("sweep",
                                  "Run the scenario's parameter sweep into sweep_<k>/"),
               swp);
    auto* plot_cmd =
        app.add_subcommand("plotdata", "Re-shape run artifacts into plot series CSVs");
    plot_cmd->add_option("run_dir", plot_run_dir, "Directory written by a previous verb")
        ->required()
        ->check(CLI::ExistingDirectory);
    plot_cmd
        ->add_option("kind", plot_kind, "One of: spectrum, sinc, cdf, box, track")
        ->required();
    plot_cmd->add_option("-o,--out", plot_out, "Output directory")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("simulate")) {
            run_simulate(load_scenario(sim.scenario_file), sim.out_dir, sim.opts);
            std::printf("wrote captures to %s\n", sim.out_dir.c_str());
        } else if (app.got_subcommand("localize")) {
            run_localize(load_scenario(loc.scenario_file), loc.out_dir, loc.opts);
            std::printf("wrote %s/ranges.csv\n", loc.out_dir.c_str());
        } else if (app.got_subcommand("track")) {
            run_track(load_scenario(trk.scenario_file), trk.out_dir, trk.opts);
            std::printf("wrote %s/track_summary.json\n", trk.out_dir.c_str());
        } else if (app.got_subcommand("solve")) {
            run_solve(load_scenario(slv.scenario_file), slv.out_dir, slv.opts);
            std::printf("wrote %s/positions.csv\n", slv.out_dir.c_str());
        } else if (app.got_subcommand("eval")) {
            const Scenario sc = load_scenario(evl.scenario_file);
            if (baseline) {
                const auto rep = compare_baseline(sc, evl.out_dir, evl.opts);
                std::printf("trials: %d\n", rep.trials);
                std::printf("baseline median:          %.6g m\n", rep.baseline_median_m);
                std::printf("enhanced median (refine): %.6g m  (ratio %.1f)\n",
                            rep.enhanced_median_m, rep.ratio_refined);
                std::printf("enhanced median (peak):   %.6g m  (ratio %.1f)\n",
                            rep.enhanced_norefine_median_m, rep.ratio_norefine);
            } else {
                if (sc.experiment.sweep)
                    throw UsageError("scenario declares a sweep; use the sweep verb");
                print_report(run_scenario(sc, evl.out_dir, evl.opts));
            }
        } else if (app.got_subcommand("sweep")) {
            const Scenario sc = load_scenario(swp.scenario_file);
            if (!sc.experiment.sweep)
                throw UsageError("scenario declares no sweep; use the eval verb");
            print_report(run_scenario(sc, swp.out_dir, swp.opts));
        } else if (app.got_subcommand("plotdata")) {
            emit_plot_data(plot_run_dir, plot_kind, plot_out);
            std::printf("wrote plot data to %s\n", plot_out.c_str());
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
