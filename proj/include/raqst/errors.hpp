#pragma once

#include <stdexcept>
#include <string>

namespace raqst {

// Operand shapes disagree (basis vs. state, record vs. estimator, ...).
struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A computation produced a non-finite or otherwise unusable intermediate.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The physical model was violated, e.g. a negative Born probability.
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or invalid run configuration. `line` is 0 when not file-based.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line(line) {}
    int line;
};

} // namespace raqst
