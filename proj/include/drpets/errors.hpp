#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drpets {

/// Non-finite or out-of-contract input.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Network produced a non-finite value, or training blew up.
class ModelDivergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CEM could not find a single finite candidate.
class PlanningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An episode was aborted; carries the step at which it failed.
class EpisodeError : public std::runtime_error {
public:
    EpisodeError(std::size_t step, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Malformed configuration; `key()` names the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace drpets
