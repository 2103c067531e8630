#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace ftle {

using State = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Contract for a finite-dimensional system dz/dt = f(z, t) with Jacobian L = df/dz.
///
/// Implementations are immutable after construction and may be shared across
/// threads evaluating different initial conditions.
class DynamicalSystem {
public:
    virtual ~DynamicalSystem() = default;

    virtual Eigen::Index dimension() const = 0;
    virtual State vector_field(const State& z, double t) const = 0;
    virtual Matrix jacobian(const State& z, double t) const = 0;

    /// L(z, t) * m. Systems with structured Jacobians override this so that
    /// tangent propagation costs O(n) per column instead of O(n^2).
    virtual Matrix apply_jacobian(const State& z, double t, const Matrix& m) const { return jacobian(z, t) * m; }

    virtual std::string name() const = 0;

    /// Resolved parameters, echoed into output headers.
    virtual std::vector<std::pair<std::string, std::string>> parameters() const { return {}; }
};

using SystemPtr = std::shared_ptr<const DynamicalSystem>;

// ---------------------------------------------------------------------------
// ABC flow

struct AbcParams {
    double a = std::numbers::sqrt3;
    double b = std::numbers::sqrt2;
    double c = 1.0;
};

State abc_vector_field(const State& z, double t, const AbcParams& p);
Matrix abc_jacobian(const State& z, double t, const AbcParams& p);

class AbcFlow final : public DynamicalSystem {
public:
    explicit AbcFlow(AbcParams params = {}) : params_(params) {}

    Eigen::Index dimension() const override { return 3; }
    State vector_field(const State& z, double t) const override { return abc_vector_field(z, t, params_); }
    Matrix jacobian(const State& z, double t) const override { return abc_jacobian(z, t, params_); }
    std::string name() const override { return "abc"; }
    std::vector<std::pair<std::string, std::string>> parameters() const override;

    const AbcParams& params() const noexcept { return params_; }

private:
    AbcParams params_;
};

// ---------------------------------------------------------------------------
// Six-mode Charney-DeVore model

struct CdvParams {
    double z1_star = 0.95;
    double z4_star = -0.76095;
    double damping = 0.1;  // C
    double beta = 1.25;
    double gamma = 0.2;
    double b = 0.5;
    /// Use z2 instead of z5 in the (alpha2 z1 - beta2) term of the z6 equation.
    bool as_printed = false;
};

/// Mode coefficients; index 0 is m = 1, index 1 is m = 2.
struct CdvCoefficients {
    std::array<double, 2> alpha{};
    std::array<double, 2> beta{};
    std::array<double, 2> delta{};
    std::array<double, 2> gamma{};
    std::array<double, 2> gamma_star{};
    double epsilon = 0.0;
};

CdvCoefficients cdv_coefficients(const CdvParams& p);

State cdv_vector_field(const State& z, double t, const CdvParams& p, const CdvCoefficients& k);
Matrix cdv_jacobian(const State& z, double t, const CdvParams& p, const CdvCoefficients& k);

class CdvModel final : public DynamicalSystem {
public:
    explicit CdvModel(CdvParams params = {}) : params_(params), coeffs_(cdv_coefficients(params)) {}

    Eigen::Index dimension() const override { return 6; }
    State vector_field(const State& z, double t) const override { return cdv_vector_field(z, t, params_, coeffs_); }
    Matrix jacobian(const State& z, double t) const override { return cdv_jacobian(z, t, params_, coeffs_); }
    std::string name() const override { return "cdv"; }
    std::vector<std::pair<std::string, std::string>> parameters() const override;

    const CdvParams& params() const noexcept { return params_; }
    const CdvCoefficients& coefficients() const noexcept { return coeffs_; }

private:
    CdvParams params_;
    CdvCoefficients coeffs_;
};

// ---------------------------------------------------------------------------
// Linear oracles

/// dz/dt = A z with constant A.
class LinearSystem final : public DynamicalSystem {
public:
    explicit LinearSystem(Matrix a);

    Eigen::Index dimension() const override { return a_.rows(); }
    State vector_field(const State& z, double) const override { return a_ * z; }
    Matrix jacobian(const State&, double) const override { return a_; }
    std::string name() const override { return "linear"; }
    std::vector<std::pair<std::string, std::string>> parameters() const override;

    const Matrix& matrix() const noexcept { return a_; }

private:
    Matrix a_;
};

/// dz/dt = A z with A banded (stored by diagonals). Jacobian action is O(n * bandwidth).
class BandedLinearSystem final : public DynamicalSystem {
public:
    /// diagonals[k] holds the entries of offset k - half_bandwidth; missing
    /// positions at the ends are ignored.
    BandedLinearSystem(Eigen::Index n, int half_bandwidth, Matrix diagonals);

    Eigen::Index dimension() const override { return n_; }
    State vector_field(const State& z, double t) const override;
    Matrix jacobian(const State& z, double t) const override;
    Matrix apply_jacobian(const State& z, double t, const Matrix& m) const override;
    std::string name() const override { return "banded"; }

    int half_bandwidth() const noexcept { return half_bandwidth_; }

private:
    Eigen::Index n_;
    int half_bandwidth_;
    Matrix diagonals_;  // (2 * half_bandwidth + 1) x n
};

/// Random banded matrix whose symmetric part is negative definite, so every
/// solution of dz/dt = A z decays. Deterministic in `seed`.
BandedLinearSystem make_random_stable_banded(Eigen::Index n, int half_bandwidth, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Registry

using ParamMap = std::map<std::string, std::string>;
using ModelFactory = std::function<SystemPtr(const ParamMap&)>;

/// String-keyed model factories. The default registry knows "abc", "cdv" and "linear".
class ModelRegistry {
public:
    static ModelRegistry with_builtin_models();

    void add(const std::string& name, ModelFactory factory);
    bool contains(const std::string& name) const { return factories_.count(name) != 0; }
    std::vector<std::string> names() const;

    /// Throws ConfigError for unknown names, unknown parameter keys and malformed values.
    SystemPtr make(const std::string& name, const ParamMap& params) const;

private:
    std::map<std::string, ModelFactory> factories_;
};

/// Parses "diag:a,b,c" or "rows:a,b;c,d" into a square matrix.
Matrix parse_matrix_spec(const std::string& spec);

}  // namespace ftle
