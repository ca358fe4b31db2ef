#pragma once

#include <stdexcept>
#include <string>

namespace hdfmcw {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration value; the message names the violated invariant.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Shape or length mismatch between signals, spectra and configs.
class StructureError : public Error {
public:
    using Error::Error;
};

/// Unknown id (radar, tag, clutter index, ...).
class LookupError : public Error {
public:
    using Error::Error;
};

/// An IF tone lands at or beyond the representable span of the capture.
class RangeAmbiguityError : public Error {
public:
    using Error::Error;
};

/// Degenerate solver geometry (collinear / coincident anchors).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to converge; carries the last iterate.
class SolverError : public Error {
public:
    SolverError(const std::string& msg, double x, double y, double z, double residual_m)
        : Error(msg), last_x(x), last_y(y), last_z(z), last_residual_m(residual_m) {}
    double last_x, last_y, last_z;
    double last_residual_m;
};

/// No usable signal content (all-zero spectrum, empty capture, ...).
class NoSignalError : public Error {
public:
    using Error::Error;
};

/// Estimation cannot proceed (e.g. phase slope outside the valid arcsin domain).
class EstimationError : public Error {
public:
    using Error::Error;
};

/// File / serialization problem.
class IoError : public Error {
public:
    using Error::Error;
};

/// Bad request from a caller-facing entry point (unknown plot kind, verb, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace hdfmcw
