#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdfmcw/localizer.hpp"
#include "hdfmcw/radar_config.hpp"
#include "hdfmcw/scene.hpp"
#include "hdfmcw/tracker.hpp"

namespace hdfmcw {

struct DumpFlags {
    bool spectrum = false;  // per radar: raw symbol spectrum CSV
    bool envelopes = false; // per detection: padded window envelope CSV
    bool iq = false;        // per radar: raw capture dump
};

struct SolveSpec {
    int dims = 0; // 0 disables position solving
    std::optional<Vec3> initial_guess;
};

struct PipelineSpec {
    int pad_factor = 128;
    bool refine_peak = true;
    double min_snr_db = 10.0;
    bool refine_fm_subbin = false;
    bool reject_harmonics = true;
    bool use_oracle = false;
    double mobile_threshold_hz = 1.4;
    int track_interval_chirps = 0; // 0 disables tracking
    int cluster_halfwidth_bins = 0;
    std::map<std::string, double> calibration_m;
    SolveSpec solve;
    DumpFlags dumps;
};

struct RandomizeRange {
    std::string tag_id;
    std::string radar_id;   // range is measured from this radar
    Vec3 direction{1, 0, 0};
    double min_m = 0.0, max_m = 0.0;
};

struct SweepSpec {
    std::string variable; // fm_ppm_offset | snr_db | range_m | speed_mps
    std::string tag_id;   // for the tag-scoped variables
    std::string radar_id; // for range_m
    Vec3 direction{1, 0, 0};
    std::vector<double> values;
};

struct ExperimentPlan {
    int trials = 1;
    std::optional<RandomizeRange> randomize_range;
    std::optional<SweepSpec> sweep;
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 0; // mandatory in the file: reruns must reproduce
    RadarConfig radar_config;
    Scene scene;
    PipelineSpec pipeline;
    IdTable id_table; // synthesized from the scene tags when absent
    ExperimentPlan experiment;
};

/// Build the default ID table straight from the scene's tags.
IdTable default_id_table(const Scene& scene, double ppm_tolerance);

/// Parse + validate; errors carry the JSON field path of the offender.
Scenario load_scenario(const std::filesystem::path& file);
Scenario parse_scenario(const std::string& json_text, const std::string& origin);

} // namespace hdfmcw
