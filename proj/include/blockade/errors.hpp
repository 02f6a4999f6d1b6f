#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace blockade {

/// Invalid physical or numerical parameters.
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Model evaluated outside its domain of validity (e.g. on atomic resonance).
class ModelError : public std::domain_error {
public:
    explicit ModelError(const std::string& msg) : std::domain_error(msg) {}
};

/// Failure of a numerical procedure (integrator, solver, fit).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed configuration or data file. `key()` names the offending entry
/// (config key or "line N") when known.
class InputError : public std::runtime_error {
public:
    InputError(std::string key, const std::string& msg)
        : std::runtime_error(key.empty() ? msg : key + ": " + msg), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace blockade
