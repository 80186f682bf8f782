#pragma once

#include <stdexcept>
#include <string>

namespace mssr {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimension/shape violations (mismatched operands, invalid tensor dims).
struct ShapeError : Error {
    using Error::Error;
};

// Invalid argument values (bad config, out-of-range scalars).
struct ArgumentError : Error {
    using Error::Error;
};

// Operation invoked against inconsistent internal state (stale cache, empty corpus).
struct StateError : Error {
    using Error::Error;
};

// Malformed or unsupported file content.
struct FormatError : Error {
    using Error::Error;
};

// Filesystem-level failures.
struct IoError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
    using Error::Error;
};

// Weight file does not match the requested network configuration.
struct CompatibilityError : Error {
    using Error::Error;
};

}  // namespace mssr
