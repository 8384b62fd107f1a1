#pragma once

#include <stdexcept>
#include <string>

namespace b2opt {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible matrix shapes or vector lengths.
struct DimensionError : Error {
    using Error::Error;
};

// Caller broke a precondition (non-scalar loss, bad argument range, ...).
struct ContractError : Error {
    using Error::Error;
};

// NaN/Inf produced or consumed.
struct NumericError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct CheckpointError : Error {
    using Error::Error;
};

// File could not be read or written.
struct IoError : Error {
    using Error::Error;
};

} // namespace b2opt
