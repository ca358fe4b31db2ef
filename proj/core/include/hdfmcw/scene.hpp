#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hdfmcw/common.hpp"

namespace hdfmcw {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

/// Monostatic reader; rx_antennas > 1 models a uniform linear array laid
/// out along array_axis with the first element at position_m.
struct RadarNode {
    std::string id;
    Vec3 position_m;
    int rx_antennas = 1;
    double antenna_spacing_m = 0.0;
    Vec3 array_axis{1.0, 0.0, 0.0};
    double noise_floor_dbm = std::nan(""); // NaN = no per-radar noise
    double timestamp_jitter_s = 0.0;       // applied to track timestamps
};

/// Retro-reflective tag that phase-toggles its reflection at fm Hz.
struct TagSpec {
    std::string id;
    Vec3 position_m;
    Vec3 velocity_mps{0.0, 0.0, 0.0};
    double fm_nominal_hz = 0.0;
    double fm_ppm_offset = 0.0;     // oscillator drift, parts per million
    double reflect_amplitude = 1.0; // received linear amplitude at 1 m
    double phase_rad = 0.0;         // initial modulation phase
};

/// Static unmodulated reflector.
struct ClutterSpec {
    Vec3 position_m;
    double reflect_amplitude = 1.0;
};

/// Extra delayed copy of one tag's reflection.
struct MultipathTap {
    std::string tag_id;
    double excess_path_m = 0.0;   // one-way excess over the direct path
    double attenuation_db = 0.0;  // relative to the direct tap
};

struct Scene {
    std::vector<RadarNode> radars;
    std::vector<TagSpec> tags;
    std::vector<ClutterSpec> clutter;
    std::vector<MultipathTap> multipath;
    std::optional<double> snr_db;          // composite-signal SNR, or ...
    std::optional<double> noise_power_db;  // ... explicit noise power; not both
    std::uint64_t rng_seed = 0;

    void validate() const;
    const RadarNode& radar(const std::string& id) const;
    const TagSpec& tag(const std::string& id) const;
};

/// Reference to either a tag (by id) or a clutter entry (by index).
struct TargetRef {
    static TargetRef make_tag(std::string id) { return {std::move(id), -1}; }
    static TargetRef make_clutter(int index) { return {{}, index}; }
    bool is_tag() const { return clutter_index < 0; }

    std::string tag_id;
    int clutter_index = -1;
};

/// Radar-to-target distance at scene time t (tags move linearly).
double range_at(const Scene& scene, const std::string& radar_id,
                const TargetRef& target, double t_s);

/// d(range)/dt at scene time t; zero for clutter.
double range_rate_at(const Scene& scene, const std::string& radar_id,
                     const TargetRef& target, double t_s);

/// Actual modulation frequency: fm_nominal_hz * (1 + fm_ppm_offset * 1e-6).
double effective_fm(const TagSpec& tag);

} // namespace hdfmcw
