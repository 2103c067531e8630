#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace ftle {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (dimension mismatch, bad grid, dt not dividing T, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A non-finite value appeared while time stepping.
class IntegrationDiverged : public Error {
public:
    IntegrationDiverged(std::size_t step, double time)
        : Error("integration diverged at step " + std::to_string(step) + " (t = " + std::to_string(time) + ")"),
          step_(step), time_(time) {}

    std::size_t step() const noexcept { return step_; }
    double time() const noexcept { return time_; }

private:
    std::size_t step_;
    double time_;
};

/// Re-orthonormalization found a (numerically) dependent column.
class DegenerateBasis : public Error {
public:
    DegenerateBasis(std::size_t column, double norm)
        : Error("degenerate basis: column " + std::to_string(column) + " has norm " + std::to_string(norm)),
          column_(column) {}

    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// Input that makes a diagnostic meaningless (zero column, too few eigenvalues).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Eigenvalues that cannot be turned into exponents (non-positive, non-finite).
class InvalidSpectrum : public Error {
public:
    using Error::Error;
};

/// Eigensolver failure.
class NumericalDegeneracy : public Error {
public:
    using Error::Error;
};

/// Two eigenvalues are closer than the allowed floor; eigenvector rates are unbounded there.
class NearDegenerate : public Error {
public:
    NearDegenerate(std::size_t i, std::size_t j, double gap)
        : Error("near-degenerate eigenvalues (" + std::to_string(i) + ", " + std::to_string(j) +
                "), gap " + std::to_string(gap)),
          first_(i), second_(j) {}

    std::size_t first() const noexcept { return first_; }
    std::size_t second() const noexcept { return second_; }

private:
    std::size_t first_;
    std::size_t second_;
};

/// Wraps a failure of one stage of the reduced-order pipeline.
class PipelineError : public Error {
public:
    enum class Cause { diverged, degenerate_basis, invalid_spectrum, other };

    PipelineError(std::string stage, Cause cause, const std::string& what)
        : Error("reduced FTLE pipeline, stage '" + stage + "': " + what), stage_(std::move(stage)), cause_(cause) {}

    const std::string& stage() const noexcept { return stage_; }
    Cause cause() const noexcept { return cause_; }

private:
    std::string stage_;
    Cause cause_;
};

}  // namespace ftle
