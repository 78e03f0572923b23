#pragma once

#include <stdexcept>
#include <string>

namespace rotdef {

// Shape or axis mismatch between tensors.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A scalar value is outside its allowed domain.
struct ValueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A precondition on an operation's arguments does not hold.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A binary container has a malformed header or unsupported version.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A file ends before the byte count its header promises.
struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A checkpoint was produced by a model with a different layer roster.
struct ArchitectureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File system level failure (missing file, unwritable path).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rotdef
