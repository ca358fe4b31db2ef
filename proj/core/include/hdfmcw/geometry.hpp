#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdfmcw/localizer.hpp"
#include "hdfmcw/scene.hpp"

namespace hdfmcw {

struct RangeObservation {
    Vec3 radar_position_m;
    double range_m = 0.0;
};

struct PositionEstimate {
    Vec3 position_m;
    double residual_m = 0.0; // rms range residual at the solution
    int dims = 3;
    int iterations = 0;
};

struct TrilatOptions {
    std::optional<Vec3> initial_guess; // default: linearized closed form
    int max_iterations = 100;
    double step_tolerance_m = 1e-6;
};

/**
 * Nonlinear multilateration: Gauss-Newton with Levenberg damping on
 * sum_i (|p - r_i| - d_i)^2.  dims = 2 solves in the xy plane (z = 0).
 * With exactly dims anchors the mirror ambiguity is resolved by the
 * initial guess.  Collinear (3D) or coincident (2D) anchors raise
 * GeometryError; running past max_iterations raises SolverError carrying
 * the last iterate.
 */
PositionEstimate trilaterate(std::span<const RangeObservation> obs, int dims,
                             const TrilatOptions& opts = {});

struct AoaEstimate {
    double angle_rad = 0.0;    // from array broadside
    bool aliasing_risk = false; // spacing > lambda/2
};

/**
 * Angle of arrival of one detected tag from a uniform linear array:
 * isolate the tag per antenna, take the phase slope across elements at
 * the strongest comb line, angle = arcsin(lambda * slope / (2 pi d)).
 * A slope outside the arcsin domain raises EstimationError.
 */
AoaEstimate estimate_aoa(std::span<const IqSignal> antennas, const RadarConfig& cfg,
                         const TagDetection& det, double antenna_spacing_m);

/// Polar to Cartesian in the radar frame: x = R cos(angle), y = R sin(angle),
/// so zero angle (broadside) lands on the +x axis.
Vec3 aoa_localize(double range_m, double angle_rad);

} // namespace hdfmcw
