#pragma once

#include <stdexcept>
#include <string>

namespace vb {

// Base class for all mathematically meaningful failures. The CLI maps these
// to exit code 2; anything derived from UsageError maps to exit code 1.
struct MathError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnknownAtomDerivative : MathError {
    using MathError::MathError;
};

struct MissingWeight : MathError {
    using MathError::MathError;
};

struct DivergentHomotopy : MathError {
    using MathError::MathError;
};

struct NonLaurentIntegrand : MathError {
    using MathError::MathError;
};

struct OrderTooHigh : MathError {
    using MathError::MathError;
};

struct DimensionMismatch : MathError {
    using MathError::MathError;
};

struct DegreeMismatch : MathError {
    using MathError::MathError;
};

struct RankUnstable : MathError {
    using MathError::MathError;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : UsageError {
    ParseError(const std::string& msg, size_t pos)
        : UsageError(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
    size_t position;
};

struct IndexArityError : UsageError {
    using UsageError::UsageError;
};

struct UnboundIdentifier : UsageError {
    using UsageError::UsageError;
};

} // namespace vb
