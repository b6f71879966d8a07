#pragma once

#include <stdexcept>
#include <string>

namespace sonarmatch {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidColorspaceError : Error {
    using Error::Error;
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct OutOfBoundsError : Error {
    using Error::Error;
};

struct DegenerateStyleError : Error {
    using Error::Error;
};

struct OptimizationDivergedError : Error {
    using Error::Error;
};

struct TrainingDivergedError : Error {
    TrainingDivergedError(const std::string& msg, int epoch_index)
        : Error(msg), epoch(epoch_index) {}
    int epoch;
};

struct InsufficientDataError : Error {
    using Error::Error;
};

/// Weight/serialization format errors.
struct FormatError : Error {
    using Error::Error;
};

struct BadMagicError : FormatError {
    using FormatError::FormatError;
};

struct TruncatedFileError : FormatError {
    using FormatError::FormatError;
};

struct TensorShapeError : FormatError {
    using FormatError::FormatError;
};

struct ConfigError : Error {
    using Error::Error;
};

struct StageError : Error {
    StageError(const std::string& stage_name, const std::string& msg)
        : Error("[" + stage_name + "] " + msg), stage(stage_name) {}
    std::string stage;
};

} // namespace sonarmatch
