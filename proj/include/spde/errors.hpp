#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace spde {

/// Precondition violated by the caller (negative time, index out of range, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical routine failed to deliver its contract (solver residual,
/// stagnating iteration, lattice budget exceeded).
class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed experiment configuration. `where` names the offending field
/// path or input position.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

}  // namespace spde
