#include "ftle/diagnostics.hpp"

#include "ftle/errors.hpp"
#include "ftle/otd.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace ftle {

SubspaceDistance subspace_distance(const Matrix& u, const Matrix& v) {
    if (u.rows() != v.rows() || u.cols() != v.cols() || u.cols() == 0) {
        throw ConfigError("subspace_distance: U and V must both be n x r");
    }
    const Eigen::Index r = u.cols();
    if ((u.transpose() * u - Matrix::Identity(r, r)).norm() > 1e-8) {
        throw ConfigError("subspace_distance: U is not column-orthonormal");
    }
    Matrix v_hat = v;
    for (Eigen::Index j = 0; j < r; ++j) {
        const double norm = v_hat.col(j).norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw DegenerateInput("subspace_distance: column " + std::to_string(j + 1) + " of V is zero");
        }
        v_hat.col(j) /= norm;
    }
    const double gamma = (u.transpose() * v_hat).norm() / std::sqrt(static_cast<double>(r));
    return {gamma, r};
}

SubspaceDistance alignment_with_left_strain(const Matrix& modes, const Matrix& gradient) {
    const StrainSpectrum left = cauchy_green(gradient, StrainSide::left);
    return subspace_distance(modes, left.eigenvectors.leftCols(modes.cols()));
}

CrossingReport detect_crossing(const std::vector<double>& times, const std::vector<Eigen::VectorXd>& lambda_history,
                               std::size_t r, double threshold, CrossingRule rule) {
    if (times.size() != lambda_history.size()) throw ConfigError("detect_crossing: times and history differ in length");
    if (r < 1) throw ConfigError("detect_crossing: r must be at least 1");
    CrossingReport rep;
    rep.first = r;
    rep.second = r + 1;
    rep.times = times;
    rep.relative_gaps.reserve(times.size());
    for (std::size_t k = 0; k < lambda_history.size(); ++k) {
        const Eigen::VectorXd& lam = lambda_history[k];
        if (static_cast<std::size_t>(lam.size()) < r + 1) {
            throw DegenerateInput("detect_crossing: need at least r + 1 = " + std::to_string(r + 1) + " eigenvalues");
        }
        for (Eigen::Index i = 0; i + 1 < lam.size(); ++i) {
            if (lam(i) < lam(i + 1)) throw DegenerateInput("detect_crossing: eigenvalue list is not descending");
        }
        const double hi = lam(static_cast<Eigen::Index>(r - 1));
        const double lo = lam(static_cast<Eigen::Index>(r));
        rep.relative_gaps.push_back(lo > 0.0 ? hi / lo - 1.0 : std::numeric_limits<double>::infinity());
    }
    if (rep.relative_gaps.empty()) return rep;

    const auto& g = rep.relative_gaps;
    std::size_t arg_min = 0;
    for (std::size_t k = 1; k < g.size(); ++k) {
        if (g[k] < g[arg_min]) arg_min = k;
    }
    rep.min_gap = g[arg_min];
    rep.t_min_gap = times[arg_min];

    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!(g[k] < threshold)) continue;
        bool flagged = rule == CrossingRule::any_sample;
        if (rule == CrossingRule::local_minimum && k > 0 && k + 1 < g.size()) {
            flagged = g[k] <= g[k - 1] && g[k] <= g[k + 1] && (g[k] < g[k - 1] || g[k] < g[k + 1]);
        }
        if (flagged) rep.events.push_back({times[k], g[k]});
    }
    rep.crossed = !rep.events.empty();
    return rep;
}

EigvecRate lancaster_rate(const Matrix& g, const Matrix& g_dot, const std::optional<StrainSpectrum>& spectrum,
                          std::optional<double> gap_floor) {
    if (g.rows() != g.cols() || g_dot.rows() != g.rows() || g_dot.cols() != g.cols()) {
        throw ConfigError("lancaster_rate: G and dG/dt must be square and of equal size");
    }
    const StrainSpectrum s = spectrum ? *spectrum : symmetric_spectrum(g);
    const Eigen::Index n = g.rows();
    const double floor = gap_floor ? *gap_floor : 1e-8 * s.eigenvalues.cwiseAbs().maxCoeff();

    EigvecRate out;
    out.r = s.eigenvectors;
    out.eigenvalues = s.eigenvalues;
    const Matrix g_tilde = out.r.transpose() * g_dot * out.r;
    out.lambda_dot = g_tilde.diagonal();
    out.k = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double gap = out.eigenvalues(j) - out.eigenvalues(i);
            if (!(std::abs(gap) > floor)) {
                throw NearDegenerate(static_cast<std::size_t>(i + 1), static_cast<std::size_t>(j + 1), std::abs(gap));
            }
            out.k(i, j) = (g_tilde(i, j) + g_tilde(j, i)) / (2.0 * gap);
            out.k(j, i) = -out.k(i, j);
        }
    }
    out.r_dot = out.r * out.k;
    return out;
}

OtdRateBound otd_rate_bound(const Matrix& jacobian, const Matrix& modes) {
    Eigen::JacobiSVD<Matrix> svd(jacobian);
    const double spectral = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    return {otd_rhs(jacobian, modes).norm(), spectral * std::sqrt(static_cast<double>(modes.cols()))};
}

}  // namespace ftle
