#pragma once

#include <stdexcept>
#include <string>

namespace derf {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad inputs, shapes or configuration. Mapped to CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numeric failure: overflow, singularity, lost convergence. CLI exit code 3.
class NumericError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class Overflow : public NumericError {
public:
    using NumericError::NumericError;
};

class AsymmetricInput : public NumericError {
public:
    using NumericError::NumericError;
};

class NoConvergence : public NumericError {
public:
    using NumericError::NumericError;
};

class SingularMoments : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateSigma : public NumericError {
public:
    using NumericError::NumericError;
};

class NegativePhi : public NumericError {
public:
    using NumericError::NumericError;
};

class NonPsdN : public NumericError {
public:
    using NumericError::NumericError;
};

class SingularTransform : public NumericError {
public:
    using NumericError::NumericError;
};

class InvalidCorrelation : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class MissingPhase : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class TrigUnsupported : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class UnsupportedFamily : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class ParseError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class MissingLabelColumn : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class TooSmall : public ConfigError {
public:
    using ConfigError::ConfigError;
};

} // namespace derf
