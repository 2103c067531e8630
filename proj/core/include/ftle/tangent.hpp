#pragma once

#include "ftle/integrators.hpp"
#include "ftle/models.hpp"

#include <functional>
#include <vector>

namespace ftle {

enum class GradientMethod { variational, finite_difference };

/// Jacobian of the flow map over [t0, t0 + horizon] at z0.
struct DeformationGradient {
    Matrix matrix;
    double t0 = 0.0;
    double horizon = 0.0;
    State z0;
    GradientMethod method = GradientMethod::variational;
};

struct FdConfig {
    double h = 1e-8;
};

/// Called after every step of the variational integration with (t, z(t), grad F(t)).
using TangentObserver = std::function<void(double t, const State& z, const Matrix& gradient)>;

/// Integrates d/dt grad F = L(z(t), t) grad F, grad F(t0) = I, coupled with the state.
DeformationGradient deformation_gradient_variational(const DynamicalSystem& sys, const State& z0,
                                                     const IntegratorConfig& cfg,
                                                     const TangentObserver& observer = {});

/// Central differences of the flow map over the 2n points z0 +- h e_i.
DeformationGradient deformation_gradient_fd(const DynamicalSystem& sys, const State& z0, const IntegratorConfig& cfg,
                                            const FdConfig& fd = {});

/// Final state of the flow map without storing the trajectory.
State advect(const DynamicalSystem& sys, const State& z0, const IntegratorConfig& cfg);

enum class StrainSide { right, left };

/// Descending Cauchy-Green eigenvalues with their eigenvectors as columns.
///
/// Eigenvalues below `kEigenvalueFloor` are clamped (see `floored`). An index is
/// marked degenerate when it belongs to a pair with lambda_i / lambda_{i+1} < 1 + 1e-10;
/// eigenvectors of such pairs are not unique. Each eigenvector has its first
/// nonzero component positive.
struct StrainSpectrum {
    Eigen::VectorXd eigenvalues;
    Matrix eigenvectors;
    StrainSide side = StrainSide::right;
    std::vector<bool> degenerate;
    bool floored = false;
};

inline constexpr double kEigenvalueFloor = 1e-300;
inline constexpr double kDegenerateRatio = 1e-10;

/// C = F^T F (right) or B = F F^T (left), then a symmetric eigendecomposition.
StrainSpectrum cauchy_green(const Matrix& gradient, StrainSide side);
inline StrainSpectrum cauchy_green(const DeformationGradient& dg, StrainSide side) {
    return cauchy_green(dg.matrix, side);
}

/// Descending eigen-decomposition of a symmetric matrix with the same sign
/// convention and degeneracy flags as cauchy_green. No flooring.
StrainSpectrum symmetric_spectrum(const Matrix& g);

struct FtleRecord {
    Eigen::VectorXd exponents;  // Lambda_i = log(lambda_i) / (2 T), descending
    double t0 = 0.0;
    double horizon = 0.0;
    State z0;
    bool floored = false;
};

/// Lambda_i = (1/T) log sqrt(lambda_i) for the leading `count` eigenvalues (all when count < 0).
/// Throws InvalidSpectrum on non-positive eigenvalues, ConfigError on T <= 0.
FtleRecord ftle(const StrainSpectrum& spectrum, double horizon, int count = -1);

/// Checks grad F xi_i = sqrt(lambda_i) eta_i (after sign alignment of eta_i) for
/// every non-degenerate index, relative to sqrt(lambda_1).
bool singular_pairing_check(const Matrix& gradient, double tol);
inline bool singular_pairing_check(const DeformationGradient& dg, double tol) {
    return singular_pairing_check(dg.matrix, tol);
}

}  // namespace ftle
