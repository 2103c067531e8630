#include "ftle/integrators.hpp"

#include "ftle/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ftle {

void IntegratorConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive, got " + std::to_string(dt));
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ConfigError("T must be positive, got " + std::to_string(horizon));
    }
    if (!std::isfinite(t0)) throw ConfigError("t0 must be finite");
    const double ratio = horizon / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        throw ConfigError("T = " + std::to_string(horizon) + " is not an integer multiple of dt = " +
                          std::to_string(dt));
    }
}

std::size_t IntegratorConfig::steps() const {
    validate();
    return static_cast<std::size_t>(std::llround(horizon / dt));
}

Trajectory integrate_state(const DynamicalSystem& sys, const State& z0, const IntegratorConfig& cfg) {
    const std::size_t n_steps = cfg.steps();
    if (z0.size() != sys.dimension()) throw ConfigError("initial state has the wrong dimension");
    const auto rhs = [&sys](double t, const State& z) { return sys.vector_field(z, t); };

    Trajectory traj;
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    traj.times.push_back(cfg.t0);
    traj.states.push_back(z0);
    State z = z0;
    for (std::size_t k = 0; k < n_steps; ++k) {
        z = rk4_step(rhs, z, cfg.time_at(k), cfg.dt);
        if (!z.allFinite()) throw IntegrationDiverged(k + 1, cfg.time_at(k + 1));
        traj.times.push_back(cfg.time_at(k + 1));
        traj.states.push_back(z);
    }
    return traj;
}

MatrixTrajectory integrate_matrix_ode(const MatrixRhs& rhs, const Matrix& m0, const IntegratorConfig& cfg,
                                      const MatrixPostStep& post_step) {
    const std::size_t n_steps = cfg.steps();
    if (!m0.allFinite()) throw IntegrationDiverged(0, cfg.t0);
    const auto f = [&rhs](double t, const Matrix& m) {
        Matrix d = rhs(m, t);
        if (d.rows() != m.rows() || d.cols() != m.cols()) throw ConfigError("matrix ODE right-hand side changed shape");
        return d;
    };

    MatrixTrajectory out;
    out.times.reserve(n_steps + 1);
    out.values.reserve(n_steps + 1);
    out.times.push_back(cfg.t0);
    out.values.push_back(m0);
    Matrix m = m0;
    for (std::size_t k = 0; k < n_steps; ++k) {
        m = rk4_step(f, m, cfg.time_at(k), cfg.dt);
        if (post_step) post_step(m, cfg.time_at(k + 1));
        if (!m.allFinite()) throw IntegrationDiverged(k + 1, cfg.time_at(k + 1));
        out.times.push_back(cfg.time_at(k + 1));
        out.values.push_back(m);
    }
    return out;
}

State interpolate_state(const Trajectory& traj, double t) {
    if (traj.times.empty()) throw ConfigError("interpolate_state: empty trajectory");
    const double slack = 1e-12 * std::max(1.0, std::abs(traj.times.back()));
    if (t < traj.times.front() - slack || t > traj.times.back() + slack) {
        throw ConfigError("interpolate_state: t outside the stored trajectory");
    }
    if (t <= traj.times.front()) return traj.states.front();
    if (t >= traj.times.back()) return traj.states.back();
    const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
    const auto hi = static_cast<std::size_t>(it - traj.times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - traj.times[lo]) / (traj.times[hi] - traj.times[lo]);
    return (1.0 - w) * traj.states[lo] + w * traj.states[hi];
}

Matrix replay_jacobian(const DynamicalSystem& sys, const Trajectory& traj, double t) {
    return sys.jacobian(interpolate_state(traj, t), t);
}

}  // namespace ftle
