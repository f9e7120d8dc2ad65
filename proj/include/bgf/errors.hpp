#pragma once

#include <stdexcept>
#include <string>

namespace bgf {

/// Bad run configuration (unknown names, invalid settings). CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input data violates the data-model invariants. CLI exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedRow : DataError {
    using DataError::DataError;
};

struct OrderingViolation : DataError {
    using DataError::DataError;
};

struct SchemaMismatch : DataError {
    using DataError::DataError;
};

/// Numerical failure during fitting or estimation. CLI exit code 4.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyData : NumericError {
    using NumericError::NumericError;
};

struct SeparationDetected : NumericError {
    using NumericError::NumericError;
};

struct SingularDesign : NumericError {
    using NumericError::NumericError;
};

/// Empirical positivity failure in the plug-in g-formula; names the stratum.
struct EmptyCell : NumericError {
    using NumericError::NumericError;
};

struct EmptyRiskSet : DataError {
    using DataError::DataError;
};

struct InsufficientTransitions : DataError {
    using DataError::DataError;
};

struct MissingScores : ConfigError {
    using ConfigError::ConfigError;
};

struct MissingTailoring : ConfigError {
    using ConfigError::ConfigError;
};

struct RegimeKindMismatch : ConfigError {
    using ConfigError::ConfigError;
};

struct TruthUnavailable : ConfigError {
    using ConfigError::ConfigError;
};

struct DrawOutOfRange : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct WidthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace bgf
