#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdfmcw/metrics.hpp"
#include "hdfmcw/scenario.hpp"

namespace hdfmcw {

struct StageTimings {
    double simulate_s = 0.0;
    double localize_s = 0.0;
    double solve_s = 0.0;
    double total_s = 0.0;
};

struct MetricsReport {
    std::size_t rows = 0;             // (trial, radar, tag) result rows
    double detection_rate = 0.0;
    SummaryStats range_error;         // |est - true| over detected rows
    std::map<std::string, SummaryStats> per_tag_error;
    std::vector<double> cdf_error_m;  // sorted detected-row errors
    std::optional<SummaryStats> position_error;
    std::size_t ghost_detections = 0; // detections no table entry claimed
    std::vector<std::string> trial_failures;
    StageTimings timings;             // serialized to timings.json only, so
                                      // metrics.json stays run-to-run identical
};

struct RunOptions {
    int threads = 0; // 0 = hardware concurrency
    bool quiet = true;
    std::optional<std::uint64_t> seed;
    std::optional<int> pad_factor;
    std::optional<bool> refine;
    std::optional<bool> oracle;
};

/**
 * Monte-Carlo evaluation of a scenario.  Writes results.csv (columns
 * trial, tag_id, true_range_m, est_range_m, error_m, snr_db, detected;
 * rows ordered by trial, then scene radar order, then id-table order),
 * metrics.json, timings.json, optional eval_positions.csv and dump files.
 * A sweep runs each value into sweep_<k>/ and adds sweep_summary.csv.
 * Per-trial failures are recorded in the report; the run continues.
 */
MetricsReport run_scenario(const Scenario& scenario,
                           const std::filesystem::path& out_dir,
                           const RunOptions& opts = {});

struct BaselineReport {
    int trials = 0;
    double enhanced_median_m = 0.0;          // padded peak + parabolic refinement
    double enhanced_norefine_median_m = 0.0; // padded peak only
    double baseline_median_m = 0.0;          // single-chirp FFT argmax
    double ratio_refined = 0.0;              // baseline / enhanced
    double ratio_norefine = 0.0;
};

/// Paired comparison against conventional single-chirp FMCW on an
/// unmodulated twin of the (single-tag) scene.  Writes baseline.json and
/// baseline_trials.csv into out_dir.
BaselineReport compare_baseline(const Scenario& scenario,
                                const std::filesystem::path& out_dir,
                                const RunOptions& opts = {});

/// Single-capture verbs backing the CLI; all write into out_dir.
void run_simulate(const Scenario& scenario, const std::filesystem::path& out_dir,
                  const RunOptions& opts = {});
void run_localize(const Scenario& scenario, const std::filesystem::path& out_dir,
                  const RunOptions& opts = {});
void run_track(const Scenario& scenario, const std::filesystem::path& out_dir,
               const RunOptions& opts = {});
void run_solve(const Scenario& scenario, const std::filesystem::path& out_dir,
               const RunOptions& opts = {});

/// Re-shapes run artifacts into plain plot series CSVs.  Kinds: spectrum,
/// sinc, cdf, box, track.
void emit_plot_data(const std::filesystem::path& run_dir, const std::string& kind,
                    const std::filesystem::path& out_dir);

} // namespace hdfmcw
