#pragma once

#include <stdexcept>
#include <string>

namespace incdet {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration (bad parameter values, malformed config file).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (CSV parse failures, schema mismatches).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Dataset cannot be partitioned as requested.
class PartitionError : public Error {
public:
    using Error::Error;
};

/// Model training failed (degenerate data, divergence).
class TrainError : public Error {
public:
    using Error::Error;
};

/// Threshold calibration failed (empty calibration set, bad level).
class CalibrationError : public Error {
public:
    using Error::Error;
};

/// Uncertainty metric undefined for the given inputs.
class MetricError : public Error {
public:
    using Error::Error;
};

/// Evaluation rate undefined (empty stratum, single-class input).
class EvalError : public Error {
public:
    using Error::Error;
};

/// Distribution fit failed (degenerate samples).
class FitError : public Error {
public:
    using Error::Error;
};

/// Filesystem / serialization failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace incdet
