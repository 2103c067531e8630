#pragma once

#include "ftle/models.hpp"
#include "ftle/tangent.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace ftle {

struct SubspaceDistance {
    double gamma = 0.0;  // in [0, 1]; 1 iff the spans coincide
    Eigen::Index r = 0;
};

/// gamma = ||U^T V_hat||_F / sqrt(r), V_hat being V with unit columns.
/// U must be column-orthonormal (tolerance 1e-8, ConfigError otherwise);
/// a zero column in V raises DegenerateInput.
SubspaceDistance subspace_distance(const Matrix& u, const Matrix& v);

/// Subspace distance between `modes` and the leading r eigenvectors of the
/// left Cauchy-Green tensor of `gradient`.
SubspaceDistance alignment_with_left_strain(const Matrix& modes, const Matrix& gradient);

enum class CrossingRule {
    /// Interior local minima of the relative gap that fall below the threshold.
    /// The gap is zero at t0 for every trajectory and grows from there, so this
    /// rule ignores the start-up where all eigenvalues are still close to 1.
    local_minimum,
    /// Every sample whose relative gap is below the threshold.
    any_sample,
};

struct CrossingEvent {
    double t = 0.0;
    double relative_gap = 0.0;
};

struct CrossingReport {
    std::size_t first = 0;   // 1-based index r of the pair (r, r + 1)
    std::size_t second = 0;
    std::vector<double> times;
    std::vector<double> relative_gaps;  // lambda_r / lambda_{r+1} - 1 per sample
    std::vector<CrossingEvent> events;
    double min_gap = 0.0;
    double t_min_gap = 0.0;
    bool crossed = false;
};

inline constexpr double kDefaultCrossingThreshold = 0.05;

/// Scans a history of descending eigenvalue lists for near-crossings of the
/// pair (lambda_r, lambda_{r+1}). Throws DegenerateInput if a list has fewer
/// than r + 1 entries or is not descending; ConfigError for mismatched sizes.
CrossingReport detect_crossing(const std::vector<double>& times, const std::vector<Eigen::VectorXd>& lambda_history,
                               std::size_t r, double threshold = kDefaultCrossingThreshold,
                               CrossingRule rule = CrossingRule::local_minimum);

/// Eigenvector rates of a symmetric matrix path G(t).
struct EigvecRate {
    Matrix k;                     // skew-symmetric, R^T dR/dt
    Matrix r;                     // eigenvectors of G (columns, descending eigenvalues)
    Matrix r_dot;                 // R K
    Eigen::VectorXd eigenvalues;  // of G, descending
    Eigen::VectorXd lambda_dot;   // diag(R^T dG/dt R)
};

/// K_ij = (Gt_ij + Gt_ji) / (2 (lambda_j - lambda_i)) with Gt = R^T dG/dt R.
/// Throws NearDegenerate when two eigenvalues are closer than gap_floor, which
/// defaults to 1e-8 * max|lambda|.
EigvecRate lancaster_rate(const Matrix& g, const Matrix& g_dot, const std::optional<StrainSpectrum>& spectrum = {},
                          std::optional<double> gap_floor = {});

struct OtdRateBound {
    double rate = 0.0;   // ||dU/dt||_F
    double bound = 0.0;  // ||L||_2 * sqrt(r)
    bool holds() const noexcept { return rate <= bound * (1.0 + 1e-12); }
};

/// Compares the OTD rate ||L U - U U^T L U|| with ||L||_2 sqrt(r).
OtdRateBound otd_rate_bound(const Matrix& jacobian, const Matrix& modes);

}  // namespace ftle
