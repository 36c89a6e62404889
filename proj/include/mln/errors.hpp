#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mln {

/// Caller violated a documented precondition (bad argument, dimension mismatch).
struct UsageError : std::invalid_argument {
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation produced or encountered a non-finite value.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// File or stream failure (missing file, bad magic, truncation).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Experiment configuration rejected by validation; carries the offending field path.
struct ConfigError : std::runtime_error {
    std::string field;

    ConfigError(std::string field_path, const std::string& what)
        : std::runtime_error("config error at " + field_path + ": " + what),
          field(std::move(field_path)) {}
};

}  // namespace mln
