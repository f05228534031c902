#pragma once

#include <stdexcept>
#include <string>

namespace gatesim {

// Configuration / input errors (CLI exit code 2)
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidGeometry : ConfigError {
    using ConfigError::ConfigError;
};

struct InvalidTopology : ConfigError {
    using ConfigError::ConfigError;
};

struct ParseError : ConfigError {
    using ConfigError::ConfigError;
};

struct InvalidTrace : ConfigError {
    using ConfigError::ConfigError;
};

// Model / runtime errors (CLI exit code 1)
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularNetwork : ModelError {
    using ModelError::ModelError;
};

struct ZeroFlow : ModelError {
    using ModelError::ModelError;
};

struct OverlappingPulses : ModelError {
    using ModelError::ModelError;
};

struct EmptySequence : ModelError {
    using ModelError::ModelError;
};

struct UnderResolved : ModelError {
    using ModelError::ModelError;
};

struct DegenerateFit : ModelError {
    using ModelError::ModelError;
};

struct DegenerateTargets : ModelError {
    using ModelError::ModelError;
};

struct EmptyWindow : ModelError {
    using ModelError::ModelError;
};

} // namespace gatesim
