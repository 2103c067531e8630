#include "ftle/otd.hpp"

#include "ftle/errors.hpp"
#include "ftle/tangent.hpp"

#include <cmath>

namespace ftle {

TangentBasis otd_init(const DynamicalSystem& sys, const State& z0, double t0, Eigen::Index r) {
    const Eigen::Index n = sys.dimension();
    if (r < 1 || r > n) {
        throw ConfigError("OTD rank r = " + std::to_string(r) + " must lie in [1, " + std::to_string(n) + "]");
    }
    const Matrix l = sys.jacobian(z0, t0);
    const Matrix sym = 0.5 * (l + l.transpose());
    const StrainSpectrum s = symmetric_spectrum(sym);
    return {s.eigenvectors.leftCols(r), t0};
}

Matrix otd_rhs_from_action(const Matrix& lu, const Matrix& modes) {
    const Matrix reduced = modes.transpose() * lu;
    return lu - modes * reduced;
}

Matrix otd_rhs(const Matrix& jacobian, const Matrix& modes) {
    return otd_rhs_from_action(jacobian * modes, modes);
}

void orthonormalize(Matrix& modes) {
    constexpr double kMinNorm = 1e-12;
    const Eigen::Index r = modes.cols();
    for (Eigen::Index j = 0; j < r; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < j; ++i) {
                modes.col(j) -= modes.col(i).dot(modes.col(j)) * modes.col(i);
            }
        }
        const double norm = modes.col(j).norm();
        if (!(norm >= kMinNorm)) throw DegenerateBasis(static_cast<std::size_t>(j), norm);
        modes.col(j) /= norm;
    }
}

namespace {

CoupledState reduced_rhs(const DynamicalSystem& sys, double t, const CoupledState& y) {
    const Matrix lu = sys.apply_jacobian(y.z, t, y.first);
    const Matrix lr = y.first.transpose() * lu;
    CoupledState d;
    d.z = sys.vector_field(y.z, t);
    d.first = lu - y.first * lr;
    d.second = y.second.size() ? Matrix(lr * y.second) : Matrix();
    return d;
}

void check_basis(const Matrix& modes, Eigen::Index n) {
    if (modes.rows() != n || modes.cols() < 1 || modes.cols() > n) throw ConfigError("OTD basis has the wrong shape");
    const Matrix gram = modes.transpose() * modes;
    if ((gram - Matrix::Identity(modes.cols(), modes.cols())).norm() > 1e-8) {
        throw ConfigError("OTD basis is not column-orthonormal");
    }
}

void check_alignment(const Trajectory& traj, const IntegratorConfig& cfg) {
    const std::size_t n_steps = cfg.steps();
    if (traj.size() != n_steps + 1) throw ConfigError("trajectory does not match the integrator configuration");
}

}  // namespace

BasisTrajectory evolve_otd(const DynamicalSystem& sys, const Trajectory& traj, const TangentBasis& initial,
                           const IntegratorConfig& cfg) {
    check_alignment(traj, cfg);
    check_basis(initial.modes, sys.dimension());
    const auto rhs = [&sys](double t, const CoupledState& y) { return reduced_rhs(sys, t, y); };

    BasisTrajectory out;
    out.times = traj.times;
    out.modes.reserve(traj.size());
    out.modes.push_back(initial.modes);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        CoupledState y{traj.states[k], out.modes.back(), Matrix()};
        y = rk4_step(rhs, y, traj.times[k], cfg.dt);
        if (!y.all_finite()) throw IntegrationDiverged(k + 1, traj.times[k + 1]);
        orthonormalize(y.first);
        out.modes.push_back(std::move(y.first));
    }
    return out;
}

ReducedFundamental reduced_fundamental(const DynamicalSystem& sys, const Trajectory& traj,
                                       const BasisTrajectory& basis, const IntegratorConfig& cfg) {
    check_alignment(traj, cfg);
    if (basis.modes.size() != traj.size()) throw ConfigError("basis samples are not aligned with the trajectory");
    const Eigen::Index r = basis.modes.front().cols();
    const auto rhs = [&sys](double t, const CoupledState& y) { return reduced_rhs(sys, t, y); };

    Matrix phi = Matrix::Identity(r, r);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        CoupledState y{traj.states[k], basis.modes[k], phi};
        y = rk4_step(rhs, y, traj.times[k], cfg.dt);
        if (!y.second.allFinite()) throw IntegrationDiverged(k + 1, traj.times[k + 1]);
        phi = std::move(y.second);
    }
    return {std::move(phi), cfg.t0, cfg.horizon};
}

ReducedFtleRecord reduced_ftle(const ReducedFundamental& phi) {
    if (!(phi.horizon > 0.0)) throw ConfigError("reduced FTLE horizon must be positive");
    const Matrix gram = phi.phi.transpose() * phi.phi;
    const StrainSpectrum s = symmetric_spectrum(gram);
    ReducedFtleRecord rec;
    rec.r = phi.phi.cols();
    rec.t0 = phi.t0;
    rec.horizon = phi.horizon;
    rec.exponents.resize(rec.r);
    for (Eigen::Index i = 0; i < rec.r; ++i) {
        const double g = s.eigenvalues(i);
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw InvalidSpectrum("reduced Cauchy-Green eigenvalue " + std::to_string(i + 1) + " is " +
                                  std::to_string(g));
        }
        rec.exponents(i) = std::log(g) / (2.0 * phi.horizon);
    }
    return rec;
}

ReducedFtleRecord reduced_ftle_pipeline(const DynamicalSystem& sys, const State& z0, Eigen::Index r,
                                        const IntegratorConfig& cfg, const PipelineOptions& options) {
    using Cause = PipelineError::Cause;
    std::size_t n_steps = 0;
    Matrix modes;
    try {
        n_steps = cfg.steps();
        if (z0.size() != sys.dimension()) throw ConfigError("initial state has the wrong dimension");
        if (options.initial_modes) {
            modes = *options.initial_modes;
            if (modes.rows() != sys.dimension() || modes.cols() != r) {
                throw ConfigError("initial OTD basis must be n x r");
            }
            orthonormalize(modes);
        } else {
            modes = otd_init(sys, z0, cfg.t0, r).modes;
        }
    } catch (const DegenerateBasis& e) {
        throw PipelineError("initialize", Cause::degenerate_basis, e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw PipelineError("initialize", Cause::other, e.what());
    }

    const auto rhs = [&sys](double t, const CoupledState& y) { return reduced_rhs(sys, t, y); };
    CoupledState y{z0, std::move(modes), Matrix::Identity(r, r)};
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t_next = cfg.time_at(k + 1);
        y = rk4_step(rhs, y, cfg.time_at(k), cfg.dt);
        if (!y.all_finite()) {
            throw PipelineError("advance", Cause::diverged, IntegrationDiverged(k + 1, t_next).what());
        }
        try {
            orthonormalize(y.first);
        } catch (const DegenerateBasis& e) {
            throw PipelineError("orthonormalize", Cause::degenerate_basis,
                                std::string(e.what()) + " at t = " + std::to_string(t_next));
        }
        if (options.observer) options.observer(t_next, y.z, y.first, y.second);
    }

    try {
        ReducedFtleRecord rec = reduced_ftle({y.second, cfg.t0, cfg.horizon});
        rec.z0 = z0;
        return rec;
    } catch (const InvalidSpectrum& e) {
        throw PipelineError("spectrum", Cause::invalid_spectrum, e.what());
    } catch (const NumericalDegeneracy& e) {
        throw PipelineError("spectrum", Cause::invalid_spectrum, e.what());
    }
}

}  // namespace ftle
