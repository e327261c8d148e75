#pragma once

#include <stdexcept>
#include <string>

namespace psad {

/// Malformed or truncated file content.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem-level failure (open/read/write).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A caller violated an API precondition.
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An invalid scene blueprint or anomaly request.
struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input too small for the requested window/stride.
struct SizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Optimization diverged (non-finite loss).
struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad or unknown configuration key/value.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace psad
