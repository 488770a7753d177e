#pragma once

#include <stdexcept>
#include <string>

namespace seqforge {

// Base error for all failures raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration or malformed user input (maps to CLI exit code 1).
struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// Runtime failure: I/O, non-convergence, contract breach (CLI exit code 2).
struct RuntimeFailure : Error {
    explicit RuntimeFailure(const std::string& what) : Error(what) {}
};

}  // namespace seqforge
