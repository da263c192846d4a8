#pragma once

#include <stdexcept>
#include <string>

namespace pedet {

/// Invalid configuration: bad thresholds, unknown model weights, malformed split ratios.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Inconsistent or insufficient data: missing verdicts, one-class ROC input, empty ground truth.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file. The message names the file and the line or byte offset.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pedet
