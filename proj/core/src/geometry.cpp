#include "hdfmcw/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "hdfmcw/errors.hpp"

namespace hdfmcw {
namespace {

Eigen::VectorXd to_vec(const Vec3& v, int dims) {
    Eigen::VectorXd x(dims);
    x(0) = v.x;
    x(1) = v.y;
    if (dims == 3) x(2) = v.z;
    return x;
}

double cost(const Eigen::MatrixXd& anchors, const Eigen::VectorXd& d,
            const Eigen::VectorXd& x) {
    double c = 0.0;
    for (int i = 0; i < anchors.rows(); ++i) {
        const double r = (x - anchors.row(i).transpose()).norm() - d(i);
        c += r * r;
    }
    return c;
}

} // namespace

PositionEstimate trilaterate(std::span<const RangeObservation> obs, int dims,
                             const TrilatOptions& opts) {
    if (dims != 2 && dims != 3)
        throw ConfigError("trilaterate: dims must be 2 or 3");
    const int n = static_cast<int>(obs.size());
    if (n < dims)
        throw GeometryError("trilaterate: need at least " + std::to_string(dims) +
                            " range observations for " + std::to_string(dims) + "D");
    for (const auto& o : obs)
        if (!(o.range_m > 0))
            throw ConfigError("trilaterate: ranges must be > 0");

    Eigen::MatrixXd anchors(n, dims);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) {
        anchors.row(i) = to_vec(obs[i].radar_position_m, dims).transpose();
        d(i) = obs[i].range_m;
    }

    // geometric degeneracy: anchor span must have rank >= dims - 1
    {
        Eigen::MatrixXd rel(n - 1, dims);
        for (int i = 1; i < n; ++i) rel.row(i - 1) = anchors.row(i) - anchors.row(0);
        const auto svd = rel.jacobiSvd();
        const double scale = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > std::max(1e-12, 1e-9 * scale)) ++rank;
        const char* what = dims == 3 ? "collinear" : "coincident";
        if (rank < dims - 1)
            throw GeometryError(std::string("trilaterate: anchors are ") + what +
                                "; the solution is not isolated");
    }

    Eigen::VectorXd x(dims);
    if (opts.initial_guess) {
        x = to_vec(*opts.initial_guess, dims);
    } else {
        // linearized closed form: subtract the first sphere equation
        Eigen::MatrixXd a(n - 1, dims);
        Eigen::VectorXd b(n - 1);
        for (int i = 1; i < n; ++i) {
            a.row(i - 1) = 2.0 * (anchors.row(i) - anchors.row(0));
            b(i - 1) = anchors.row(i).squaredNorm() - anchors.row(0).squaredNorm() -
                       d(i) * d(i) + d(0) * d(0);
        }
        x = a.colPivHouseholderQr().solve(b);
    }

    double lambda = 1e-3;
    double current = cost(anchors, d, x);
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        Eigen::MatrixXd jac(n, dims);
        Eigen::VectorXd res(n);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd rel = x - anchors.row(i).transpose();
            double dist = rel.norm();
            if (dist < 1e-12) { // sitting on an anchor: nudge off it
                rel.setZero();
                rel(0) = 1.0;
                dist = 1e-12;
            }
            jac.row(i) = (rel / dist).transpose();
            res(i) = dist - d(i);
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * res;

        bool stepped = false;
        Eigen::VectorXd step(dims);
        for (int attempt = 0; attempt < 25; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal().array() += lambda;
            step = damped.ldlt().solve(-jtr);
            const Eigen::VectorXd candidate = x + step;
            const double c = cost(anchors, d, candidate);
            if (c < current || step.norm() < opts.step_tolerance_m) {
                x = candidate;
                current = c;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped || step.norm() < opts.step_tolerance_m) {
            ++it;
            break;
        }
        if (it + 1 == opts.max_iterations) {
            const double rms = std::sqrt(current / n);
            throw SolverError(
                "trilaterate: no convergence after " +
                    std::to_string(opts.max_iterations) + " iterations (rms residual " +
                    std::to_string(rms) + " m)",
                x(0), x(1), dims == 3 ? x(2) : 0.0, rms);
        }
    }

    PositionEstimate est;
    est.position_m = {x(0), x(1), dims == 3 ? x(2) : 0.0};
    est.residual_m = std::sqrt(cost(anchors, d, x) / n);
    est.dims = dims;
    est.iterations = it;
    return est;
}

AoaEstimate estimate_aoa(std::span<const IqSignal> antennas, const RadarConfig& cfg,
                         const TagDetection& det, double antenna_spacing_m) {
    if (antennas.size() < 2)
        throw ConfigError("estimate_aoa: need at least two antenna captures");
    if (!(antenna_spacing_m > 0))
        throw ConfigError("estimate_aoa: antenna_spacing_m must be > 0");

    // complex amplitude of the strongest comb line, per antenna, always at
    // the same bin so the phase slope is comparable
    std::vector<Spectrum> cleans;
    cleans.reserve(antennas.size());
    for (const auto& sig : antennas)
        cleans.push_back(isolate_tag(if_spectrum(sig, cfg), det));

    const int n = cleans[0].grid_stride;
    const std::size_t p = cleans[0].bins.size() / n;
    std::size_t best_m = 0;
    double best_pw = 0.0;
    for (std::size_t m = 0; m < p; ++m) {
        double pw = 0.0;
        for (const auto& c : cleans) pw += std::norm(c.bins[m * n]);
        if (pw > best_pw) {
            best_pw = pw;
            best_m = m;
        }
    }
    if (best_pw == 0.0) throw NoSignalError("estimate_aoa: isolated spectra are all zero");

    double slope = 0.0; // mean adjacent phase difference, principal value
    for (std::size_t i = 1; i < cleans.size(); ++i) {
        const cplx a = cleans[i - 1].bins[best_m * static_cast<std::size_t>(n)];
        const cplx b = cleans[i].bins[best_m * static_cast<std::size_t>(n)];
        if (a == cplx(0.0, 0.0) || b == cplx(0.0, 0.0))
            throw NoSignalError("estimate_aoa: antenna " + std::to_string(i) +
                                " has no energy at the reference comb line");
        slope += std::arg(b * std::conj(a));
    }
    slope /= static_cast<double>(cleans.size() - 1);

    const double lambda = kSpeedOfLight / cfg.carrier_hz;
    const double s = lambda * slope / (kTwoPi * antenna_spacing_m);
    if (std::abs(s) > 1.0)
        throw EstimationError(
            "estimate_aoa: phase slope maps outside the arcsin domain (|sin| = " +
            std::to_string(std::abs(s)) + "); unwrap failed");
    AoaEstimate est;
    est.angle_rad = std::asin(s);
    est.aliasing_risk = antenna_spacing_m > lambda / 2.0;
    return est;
}

Vec3 aoa_localize(double range_m, double angle_rad) {
    if (!(range_m >= 0)) throw ConfigError("aoa_localize: range must be >= 0");
    return {range_m * std::cos(angle_rad), range_m * std::sin(angle_rad), 0.0};
}

} // namespace hdfmcw
