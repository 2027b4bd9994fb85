#pragma once

#include <stdexcept>
#include <string>

namespace seqclr {

// Bad CLI arguments, malformed config or dataset files. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Incompatible saved state (checkpoint/architecture mismatch). CLI exit code 3.
class StateError : public std::runtime_error {
public:
    explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite loss during training. CLI exit code 4.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace seqclr
