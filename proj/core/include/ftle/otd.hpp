#pragma once

#include "ftle/integrators.hpp"
#include "ftle/models.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace ftle {

/// n x r column-orthonormal basis of optimally time-dependent (OTD) modes at time t.
struct TangentBasis {
    Matrix modes;
    double t = 0.0;

    Eigen::Index rank() const noexcept { return modes.cols(); }
};

/// Leading r eigenvectors of the symmetric part (L + L^T) / 2 of the Jacobian at (z0, t0):
/// the instantaneously most unstable directions.
TangentBasis otd_init(const DynamicalSystem& sys, const State& z0, double t0, Eigen::Index r);

/// dU/dt = L U - U (U^T L U).
Matrix otd_rhs(const Matrix& jacobian, const Matrix& modes);

/// Same as otd_rhs, given the product L U.
Matrix otd_rhs_from_action(const Matrix& jacobian_times_modes, const Matrix& modes);

/// In-place modified Gram-Schmidt (two passes) producing the Q factor of the
/// QR factorization with positive diagonal, so span and column order are kept.
/// Throws DegenerateBasis when a column norm falls below 1e-12.
void orthonormalize(Matrix& modes);

struct BasisTrajectory {
    std::vector<double> times;
    std::vector<Matrix> modes;
};

/// Advances the OTD basis along `traj`. Each step restarts from the stored
/// state and advances (z, U) as one RK4 system, then re-orthonormalizes U.
BasisTrajectory evolve_otd(const DynamicalSystem& sys, const Trajectory& traj, const TangentBasis& initial,
                           const IntegratorConfig& cfg);

/// r x r fundamental matrix of d/dt Phi = (U^T L U) Phi with Phi(t0) = I.
/// With Phi(t0) = I it is the transform T(t) that maps U(t) onto the
/// linearized-flow image of U(t0): grad F U(t0) = U(t) Phi(t).
struct ReducedFundamental {
    Matrix phi;
    double t0 = 0.0;
    double horizon = 0.0;
};

ReducedFundamental reduced_fundamental(const DynamicalSystem& sys, const Trajectory& traj,
                                       const BasisTrajectory& basis, const IntegratorConfig& cfg);

struct ReducedFtleRecord {
    Eigen::VectorXd exponents;  // Gamma_i, descending; may be negative
    Eigen::Index r = 0;
    double t0 = 0.0;
    double horizon = 0.0;
    State z0;
};

/// Gamma_i = (1/T) log sqrt(gamma_i), gamma_i the eigenvalues of Phi^T Phi.
ReducedFtleRecord reduced_ftle(const ReducedFundamental& phi);

/// Called after every step with (t, z, U, Phi); U is already re-orthonormalized.
using ReducedObserver = std::function<void(double t, const State& z, const Matrix& modes, const Matrix& phi)>;

struct PipelineOptions {
    /// Overrides otd_init; must be n x r. It is orthonormalized before use.
    std::optional<Matrix> initial_modes;
    ReducedObserver observer;
};

/// Full reduced-order FTLE computation for one initial condition: state, OTD
/// basis and reduced fundamental matrix advance together in each RK4 step.
/// Failures are rethrown as PipelineError naming the stage.
ReducedFtleRecord reduced_ftle_pipeline(const DynamicalSystem& sys, const State& z0, Eigen::Index r,
                                        const IntegratorConfig& cfg, const PipelineOptions& options = {});

/// Scalar ODE counts per initial condition for the two approaches.
inline long long full_equation_count(long long n) { return (n + 1) * n; }
inline long long reduced_equation_count(long long n, long long r) { return n * (r + 1) + r * r; }

}  // namespace ftle
