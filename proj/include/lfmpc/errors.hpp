#pragma once

#include <stdexcept>
#include <string>

namespace lfmpc {

/// Invalid hyperparameters, dimensions, or experiment configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure at runtime: ill-conditioned factorization, state
/// blow-up, filter degeneracy.
class NumericsError : public std::runtime_error {
public:
    explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace lfmpc
