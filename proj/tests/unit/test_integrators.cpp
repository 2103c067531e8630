#include "ftle/errors.hpp"
#include "ftle/integrators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace ftle;
using ftle::testing::expm_taylor;
using ftle::testing::Gen;

namespace {

class ZeroField final : public DynamicalSystem {
public:
    explicit ZeroField(Eigen::Index n) : n_(n) {}
    Eigen::Index dimension() const override { return n_; }
    State vector_field(const State&, double) const override { return State::Zero(n_); }
    Matrix jacobian(const State&, double) const override { return Matrix::Zero(n_, n_); }
    std::string name() const override { return "zero"; }

private:
    Eigen::Index n_;
};

/// dz/dt = z^2 blows up at t = 1 for z0 = 1.
class BlowUp final : public DynamicalSystem {
public:
    Eigen::Index dimension() const override { return 1; }
    State vector_field(const State& z, double) const override { return z.array().square(); }
    Matrix jacobian(const State& z, double) const override { return (2.0 * z).asDiagonal(); }
    std::string name() const override { return "blowup"; }
};

double decay_error(double dt) {
    const LinearSystem sys(-Matrix::Identity(1, 1));
    const auto traj = integrate_state(sys, State::Ones(1), {0.0, 1.0, dt});
    return std::abs(traj.states.back()(0) - std::exp(-1.0));
}

}  // namespace

TEST(IntegratorConfig, Validation) {
    EXPECT_NO_THROW((IntegratorConfig{0.0, 8.0, 0.01}.validate()));
    EXPECT_THROW((IntegratorConfig{0.0, 8.0, 0.0}.validate()), ConfigError);
    EXPECT_THROW((IntegratorConfig{0.0, 8.0, -0.1}.validate()), ConfigError);
    EXPECT_THROW((IntegratorConfig{0.0, 0.0, 0.1}.validate()), ConfigError);
    EXPECT_THROW((IntegratorConfig{0.0, 1.0, 0.3}.validate()), ConfigError);
    EXPECT_EQ((IntegratorConfig{0.0, 8.0, 0.01}.steps()), 800u);
    EXPECT_EQ((IntegratorConfig{0.0, 30.0, 0.4}.steps()), 75u);
}

TEST(IntegrateState, ZeroFieldIsConstant) {
    const State z0 = (State(3) << 1.0, -2.0, 0.5).finished();
    const auto traj = integrate_state(ZeroField(3), z0, {0.0, 1.0, 0.1});
    ASSERT_EQ(traj.size(), 11u);
    for (const auto& z : traj.states) EXPECT_EQ(z, z0);
}

TEST(IntegrateState, SamplesCoverTheWindow) {
    const auto traj = integrate_state(ZeroField(1), State::Zero(1), {2.0, 1.5, 0.25});
    ASSERT_EQ(traj.size(), 7u);
    EXPECT_EQ(traj.times.front(), 2.0);
    EXPECT_DOUBLE_EQ(traj.times.back(), 3.5);
    for (std::size_t k = 1; k < traj.size(); ++k) EXPECT_GT(traj.times[k], traj.times[k - 1]);
}

TEST(IntegrateState, ExponentialDecay) {
    EXPECT_LE(decay_error(0.01), 1e-9);
    EXPECT_NEAR(std::exp(-1.0), 0.3678794412, 1e-10);
}

TEST(IntegrateState, FourthOrderConvergence) {
    for (double dt : {0.1, 0.05, 0.025}) {
        const double ratio = decay_error(dt) / decay_error(dt / 2);
        EXPECT_GE(ratio, 12.0) << "dt=" << dt;
        EXPECT_LE(ratio, 20.0) << "dt=" << dt;
    }
}

TEST(IntegrateState, AbcStepHalving) {
    const AbcFlow abc;
    const State z0 = (State(3) << 2.0, 0.6, 0.0).finished();
    const State a = integrate_state(abc, z0, {0.0, 8.0, 0.01}).states.back();
    const State b = integrate_state(abc, z0, {0.0, 8.0, 0.005}).states.back();
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(IntegrateState, DivergenceCarriesStep) {
    try {
        integrate_state(BlowUp{}, State::Ones(1), {0.0, 2.0, 0.01});
        FAIL() << "expected IntegrationDiverged";
    } catch (const IntegrationDiverged& e) {
        EXPECT_GT(e.step(), 90u);
        EXPECT_LE(e.time(), 2.0);
    }
}

TEST(IntegrateState, DimensionMismatch) {
    EXPECT_THROW(integrate_state(ZeroField(3), State::Zero(2), {}), ConfigError);
}

TEST(IntegrateMatrix, ZeroRhsKeepsInitialValue) {
    Gen gen(1);
    const Matrix m0 = gen.matrix(4, 2);
    const auto traj =
        integrate_matrix_ode([](const Matrix& m, double) { return Matrix::Zero(m.rows(), m.cols()); }, m0,
                             {0.0, 1.0, 0.1});
    for (const auto& m : traj.values) {
        EXPECT_EQ(m, m0);
        EXPECT_EQ(m.rows(), 4);
        EXPECT_EQ(m.cols(), 2);
    }
}

TEST(IntegrateMatrix, ConstantCoefficientMatchesExponential) {
    Gen gen(2);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix a = gen.matrix(4, 4);
        a *= 2.0 / a.operatorNorm();
        const auto traj = integrate_matrix_ode([&](const Matrix& m, double) { return Matrix(a * m); },
                                               Matrix::Identity(4, 4), {0.0, 1.0, 1e-3});
        EXPECT_LE((traj.values.back() - expm_taylor(a)).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(IntegrateMatrix, PostStepRunsAfterEveryStep) {
    int calls = 0;
    const auto traj = integrate_matrix_ode([](const Matrix& m, double) { return Matrix(m); }, Matrix::Ones(2, 2),
                                           {0.0, 1.0, 0.1}, [&](Matrix& m, double) {
                                               ++calls;
                                               m /= m.norm();
                                           });
    EXPECT_EQ(calls, 10);
    EXPECT_NEAR(traj.values.back().norm(), 1.0, 1e-15);
}

TEST(IntegrateMatrix, ShapeChangeAndNonFinite) {
    EXPECT_THROW(integrate_matrix_ode([](const Matrix&, double) { return Matrix::Zero(3, 3); }, Matrix::Zero(2, 2),
                                      {0.0, 1.0, 0.5}),
                 ConfigError);
    EXPECT_THROW(integrate_matrix_ode(
                     [](const Matrix& m, double) {
                         return Matrix::Constant(m.rows(), m.cols(), std::numeric_limits<double>::infinity());
                     },
                     Matrix::Zero(2, 2), {0.0, 1.0, 0.5}),
                 IntegrationDiverged);
}

TEST(IntegrateMatrix, AgreesWithStateIntegratorOnDecoupledCopies) {
    // Each column of M carries an independent copy of dz/dt = A z.
    Gen gen(8);
    const Matrix a = gen.matrix(3, 3);
    const LinearSystem sys(a);
    const Matrix m0 = gen.matrix(3, 4);
    const IntegratorConfig cfg{0.0, 2.0, 0.01};
    const auto mt = integrate_matrix_ode([&](const Matrix& m, double) { return Matrix(a * m); }, m0, cfg);
    for (Eigen::Index j = 0; j < 4; ++j) {
        const State z = integrate_state(sys, m0.col(j), cfg).states.back();
        EXPECT_LE((mt.values.back().col(j) - z).norm(), 1e-13);
    }
}

TEST(Replay, InterpolatesLinearly) {
    const LinearSystem sys(-Matrix::Identity(1, 1));
    const auto traj = integrate_state(sys, State::Ones(1), {0.0, 1.0, 0.5});
    const State mid = interpolate_state(traj, 0.25);
    EXPECT_DOUBLE_EQ(mid(0), 0.5 * (traj.states[0](0) + traj.states[1](0)));
    EXPECT_EQ(interpolate_state(traj, 1.0), traj.states.back());
    EXPECT_THROW(interpolate_state(traj, 1.5), ConfigError);
    EXPECT_EQ(replay_jacobian(sys, traj, 0.3), -Matrix::Identity(1, 1));
}
