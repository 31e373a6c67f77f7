#pragma once

#include <stdexcept>
#include <string>

namespace foldover {

// Validation failures exit the CLI with code 1, I/O failures with code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// framestore
class MixedDimensionsError : public ValidationError {
public:
    using ValidationError::ValidationError;
};
class EmptySequenceError : public ValidationError {
public:
    using ValidationError::ValidationError;
};
class MalformedHeaderError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// foldover
class DimensionMismatchError : public ValidationError {
public:
    using ValidationError::ValidationError;
};
class EmptyTrackError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// features
class AxisMismatchError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// classify
class LengthMismatchError : public ValidationError {
public:
    using ValidationError::ValidationError;
};
class UnknownLabelError : public ValidationError {
public:
    using ValidationError::ValidationError;
};
class EmptyMatrixError : public ValidationError {
public:
    using ValidationError::ValidationError;
};
class InconsistentDimsError : public ValidationError {
public:
    using ValidationError::ValidationError;
};
class MissingClassError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// synth
class SpecViolationError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// cli / io
class IoFailureError : public IoError {
public:
    using IoError::IoError;
};

} // namespace foldover
