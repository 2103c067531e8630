#include "ftle/tangent.hpp"

#include "ftle/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace ftle {

DeformationGradient deformation_gradient_variational(const DynamicalSystem& sys, const State& z0,
                                                     const IntegratorConfig& cfg, const TangentObserver& observer) {
    const std::size_t n_steps = cfg.steps();
    const Eigen::Index n = sys.dimension();
    if (z0.size() != n) throw ConfigError("initial state has the wrong dimension");

    const auto rhs = [&sys](double t, const CoupledState& y) {
        return CoupledState{sys.vector_field(y.z, t), sys.apply_jacobian(y.z, t, y.first), Matrix()};
    };
    CoupledState y{z0, Matrix::Identity(n, n), Matrix()};
    for (std::size_t k = 0; k < n_steps; ++k) {
        y = rk4_step(rhs, y, cfg.time_at(k), cfg.dt);
        if (!y.all_finite()) throw IntegrationDiverged(k + 1, cfg.time_at(k + 1));
        if (observer) observer(cfg.time_at(k + 1), y.z, y.first);
    }
    return {std::move(y.first), cfg.t0, cfg.horizon, z0, GradientMethod::variational};
}

State advect(const DynamicalSystem& sys, const State& z0, const IntegratorConfig& cfg) {
    const std::size_t n_steps = cfg.steps();
    const auto rhs = [&sys](double t, const State& z) { return sys.vector_field(z, t); };
    State z = z0;
    for (std::size_t k = 0; k < n_steps; ++k) {
        z = rk4_step(rhs, z, cfg.time_at(k), cfg.dt);
        if (!z.allFinite()) throw IntegrationDiverged(k + 1, cfg.time_at(k + 1));
    }
    return z;
}

DeformationGradient deformation_gradient_fd(const DynamicalSystem& sys, const State& z0, const IntegratorConfig& cfg,
                                            const FdConfig& fd) {
    if (!(fd.h > 0.0)) throw ConfigError("finite-difference h must be positive");
    const Eigen::Index n = sys.dimension();
    if (z0.size() != n) throw ConfigError("initial state has the wrong dimension");
    advect(sys, z0, cfg);  // the centre trajectory must exist too; divergence there is reported
    Matrix grad(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        State plus = z0;
        State minus = z0;
        plus(i) += fd.h;
        minus(i) -= fd.h;
        // Dividing by the realized step removes the rounding in z0 +- h.
        grad.col(i) = (advect(sys, plus, cfg) - advect(sys, minus, cfg)) / (plus(i) - minus(i));
    }
    return {std::move(grad), cfg.t0, cfg.horizon, z0, GradientMethod::finite_difference};
}

namespace {

void fix_signs(Matrix& vectors) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
            if (std::abs(vectors(i, j)) > 1e-12) {
                if (vectors(i, j) < 0.0) vectors.col(j) *= -1.0;
                break;
            }
        }
    }
}

StrainSpectrum descending_eigen(const Matrix& g) {
    if (g.rows() != g.cols() || g.rows() == 0) throw ConfigError("symmetric spectrum: matrix must be square");
    if (!g.allFinite()) throw NumericalDegeneracy("symmetric spectrum: non-finite matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(g);
    if (solver.info() != Eigen::Success) throw NumericalDegeneracy("symmetric eigensolver did not converge");
    const Eigen::Index n = g.rows();
    StrainSpectrum s;
    s.eigenvalues = solver.eigenvalues().reverse();
    s.eigenvectors = solver.eigenvectors().rowwise().reverse();
    fix_signs(s.eigenvectors);
    s.degenerate.assign(static_cast<std::size_t>(n), false);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double hi = s.eigenvalues(i);
        const double lo = s.eigenvalues(i + 1);
        if (hi - lo <= kDegenerateRatio * std::abs(lo)) {
            s.degenerate[static_cast<std::size_t>(i)] = true;
            s.degenerate[static_cast<std::size_t>(i + 1)] = true;
        }
    }
    return s;
}

}  // namespace

StrainSpectrum symmetric_spectrum(const Matrix& g) { return descending_eigen(g); }

StrainSpectrum cauchy_green(const Matrix& gradient, StrainSide side) {
    const Matrix tensor = side == StrainSide::right ? Matrix(gradient.transpose() * gradient)
                                                    : Matrix(gradient * gradient.transpose());
    StrainSpectrum s = descending_eigen(tensor);
    s.side = side;
    for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
        if (s.eigenvalues(i) < kEigenvalueFloor) {
            s.eigenvalues(i) = kEigenvalueFloor;
            s.floored = true;
        }
    }
    return s;
}

FtleRecord ftle(const StrainSpectrum& spectrum, double horizon, int count) {
    if (!(horizon > 0.0)) throw ConfigError("FTLE horizon must be positive");
    const Eigen::Index n = spectrum.eigenvalues.size();
    const Eigen::Index k = count < 0 ? n : std::min<Eigen::Index>(count, n);
    FtleRecord rec;
    rec.horizon = horizon;
    rec.floored = spectrum.floored;
    rec.exponents.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double lambda = spectrum.eigenvalues(i);
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            throw InvalidSpectrum("eigenvalue " + std::to_string(i + 1) + " is " + std::to_string(lambda));
        }
        rec.exponents(i) = std::log(lambda) / (2.0 * horizon);
    }
    return rec;
}

bool singular_pairing_check(const Matrix& gradient, double tol) {
    const StrainSpectrum right = cauchy_green(gradient, StrainSide::right);
    const StrainSpectrum left = cauchy_green(gradient, StrainSide::left);
    const double scale = std::sqrt(right.eigenvalues(0));
    for (Eigen::Index i = 0; i < right.eigenvalues.size(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (right.degenerate[idx] || left.degenerate[idx]) continue;
        const Eigen::VectorXd image = gradient * right.eigenvectors.col(i);
        Eigen::VectorXd eta = left.eigenvectors.col(i);
        if (image.dot(eta) < 0.0) eta = -eta;
        if ((image - std::sqrt(right.eigenvalues(i)) * eta).norm() > tol * scale) return false;
    }
    return true;
}

}  // namespace ftle
