#pragma once

#include <stdexcept>
#include <string>

namespace hmmfuse {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent input data. The CLI maps these to exit code 2.
struct DataError : Error {
    using Error::Error;
};

// Filesystem / serialization failures. CLI exit code 3.
struct IoError : Error {
    using Error::Error;
};

struct NonFrameLine : DataError {
    using DataError::DataError;
};
struct EmptyCorpus : DataError {
    using DataError::DataError;
};
struct EmptyTrace : DataError {
    using DataError::DataError;
};
struct BadDimensions : DataError {
    using DataError::DataError;
};
struct SymbolOutOfRange : DataError {
    using DataError::DataError;
};
struct EmptyTrainingSet : DataError {
    using DataError::DataError;
};
struct SingleClassValidation : DataError {
    using DataError::DataError;
};
struct LengthMismatch : DataError {
    using DataError::DataError;
};
struct TooFewDetectors : DataError {
    using DataError::DataError;
};
struct MissingDetectorScore : DataError {
    using DataError::DataError;
};
struct ClassTooSmall : DataError {
    using DataError::DataError;
};

}  // namespace hmmfuse
