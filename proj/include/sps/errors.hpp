#pragma once

#include <stdexcept>
#include <string>

namespace sps {

/// Invalid parameters: a config, scenario or experiment spec that cannot be run.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The analytical model left its validity domain, or the solver failed.
class ModelError : public std::runtime_error {
public:
    enum class Kind { Overload, Domain, Iteration };

    ModelError(Kind kind, const std::string& what, double residual = 0.0)
        : std::runtime_error(what), kind_(kind), residual_(residual) {}

    Kind kind() const noexcept { return kind_; }
    /// Last fixed-point residual; only meaningful for Kind::Iteration.
    double residual() const noexcept { return residual_; }

private:
    Kind kind_;
    double residual_;
};

inline const char* to_string(ModelError::Kind kind) {
    switch (kind) {
    case ModelError::Kind::Overload: return "overload";
    case ModelError::Kind::Domain: return "domain";
    case ModelError::Kind::Iteration: return "iteration";
    }
    return "unknown";
}

}  // namespace sps
