#pragma once

#include "ftle/models.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace ftle {

enum class Scheme { rk4 };

/// Fixed-step integration window [t0, t0 + horizon].
struct IntegratorConfig {
    double t0 = 0.0;
    double horizon = 8.0;
    double dt = 0.01;
    Scheme scheme = Scheme::rk4;

    /// Throws ConfigError unless dt > 0, horizon > 0 and horizon is an integer multiple of dt.
    void validate() const;
    std::size_t steps() const;
    double time_at(std::size_t step) const { return t0 + static_cast<double>(step) * dt; }
};

/// Samples t0, t0 + dt, ..., t0 + horizon with the matching states.
struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;

    std::size_t size() const noexcept { return times.size(); }
};

struct MatrixTrajectory {
    std::vector<double> times;
    std::vector<Matrix> values;
};

/// State of the coupled one-step integration: the base point plus up to two
/// matrix blocks advanced with it (deformation gradient, or OTD basis and
/// reduced fundamental matrix). Unused blocks are 0x0.
struct CoupledState {
    State z;
    Matrix first;
    Matrix second;

    bool all_finite() const { return z.allFinite() && first.allFinite() && second.allFinite(); }
};

inline CoupledState axpy(const CoupledState& y, double a, const CoupledState& k) {
    return {y.z + a * k.z, y.first + a * k.first, y.second + a * k.second};
}

inline Matrix axpy(const Matrix& y, double a, const Matrix& k) { return y + a * k; }
inline State axpy(const State& y, double a, const State& k) { return y + a * k; }

/// One classical RK4 step of dy/dt = rhs(t, y). `Y` must support axpy(y, a, k).
template <class Y, class Rhs>
Y rk4_step(const Rhs& rhs, const Y& y, double t, double dt) {
    const Y k1 = rhs(t, y);
    const Y k2 = rhs(t + 0.5 * dt, axpy(y, 0.5 * dt, k1));
    const Y k3 = rhs(t + 0.5 * dt, axpy(y, 0.5 * dt, k2));
    const Y k4 = rhs(t + dt, axpy(y, dt, k3));
    Y sum = axpy(k1, 2.0, k2);
    sum = axpy(sum, 2.0, k3);
    sum = axpy(sum, 1.0, k4);
    return axpy(y, dt / 6.0, sum);
}

/// Integrates dz/dt = f(z, t) and stores every step.
/// Throws IntegrationDiverged with the failing step index on a non-finite state.
Trajectory integrate_state(const DynamicalSystem& sys, const State& z0, const IntegratorConfig& cfg);

using MatrixRhs = std::function<Matrix(const Matrix& m, double t)>;
using MatrixPostStep = std::function<void(Matrix& m, double t)>;

/// RK4 on dM/dt = rhs(M, t). `post_step`, if set, runs after every full step
/// (e.g. re-orthonormalization) and before the sample is stored.
MatrixTrajectory integrate_matrix_ode(const MatrixRhs& rhs, const Matrix& m0, const IntegratorConfig& cfg,
                                      const MatrixPostStep& post_step = {});

/// Linear interpolation of a stored trajectory. Approximate: only meant for
/// replaying matrix ODEs after the fact; the coupled integrators do not use it.
State interpolate_state(const Trajectory& traj, double t);

/// Jacobian evaluated along a stored trajectory by linear state interpolation
/// (approximate replay mode).
Matrix replay_jacobian(const DynamicalSystem& sys, const Trajectory& traj, double t);

}  // namespace ftle
