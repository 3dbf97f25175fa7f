#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace memcap {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Noise PSD has an eigenvalue at or below the singularity tolerance on the
/// evaluation grid. Capacity needs the inverse noise PSD, so this is fatal.
class NoiseSingularError : public Error {
public:
    NoiseSingularError(const std::string& what, std::vector<double> frequencies)
        : Error(what), singular_frequencies(std::move(frequencies)) {}
    std::vector<double> singular_frequencies;
};

/// Noise PSD has an eigenvalue below -tol on the grid: the covariance taps
/// are inconsistent with any stationary process.
class NoiseIndefiniteError : public Error {
public:
    using Error::Error;
};

/// Every whitened eigenvalue at every grid node is zero; water-filling has
/// no mode to pour power into.
class AllModesSingularError : public Error {
public:
    using Error::Error;
};

/// Iteration or bracket-expansion cap exceeded.
class NoConvergenceError : public Error {
public:
    using Error::Error;
};

/// The two algebraic forms of the capacity integral disagree beyond
/// tolerance. Internal consistency failure.
class FormMismatchError : public Error {
public:
    using Error::Error;
};

/// Dual iterate left the domain: the trace-weight matrix M must be
/// positive definite for the inner water-filling step.
class MNotPositiveError : public Error {
public:
    using Error::Error;
};

/// A qualifying MISO-PAC solution failed the rank-one structure check.
class NotRankOneError : public Error {
public:
    using Error::Error;
};

/// Input document violates the spec-file schema.
class SchemaError : public Error {
public:
    SchemaError(const std::string& what, std::string field)
        : Error(what + " (at " + field + ")"), field_path(std::move(field)) {}
    std::string field_path;
};

} // namespace memcap
