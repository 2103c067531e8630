#pragma once

#include "ftle/diagnostics.hpp"
#include "ftle/integrators.hpp"
#include "ftle/models.hpp"
#include "ftle/tangent.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ftle {

/// One varying coordinate of a slice: `count` points from `min` to `max` inclusive.
struct GridAxis {
    Eigen::Index coordinate = 0;  // 0-based state index
    double min = 0.0;
    double max = 1.0;
    Eigen::Index count = 2;

    double value(Eigen::Index i) const;
};

/// 2-D slice of phase space. `fixed` holds the values of the remaining
/// coordinates in increasing index order (length n - 2).
struct GridSpec {
    GridAxis x;
    GridAxis y;
    State fixed;

    /// Throws ConfigError on counts < 2, min >= max, repeated/out-of-range coordinates
    /// or a fixed vector of the wrong length.
    void validate(Eigen::Index dimension) const;
    State point(Eigen::Index i, Eigen::Index j) const;
    Eigen::Index size() const noexcept { return x.count * y.count; }
};

enum class FieldMethod { full_fd, full_variational, reduced };

std::string to_string(FieldMethod m);
FieldMethod field_method_from_string(const std::string& s);

/// Per-point status. `ok` and `crossing` points carry finite values.
enum class PointFlag : std::uint8_t { ok, crossing, diverged, degenerate_basis, invalid_spectrum, exceeds_full, failed };

std::string to_string(PointFlag f);
PointFlag point_flag_from_string(const std::string& s);

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Leading exponent (Lambda_1 or Gamma_1) over a grid, row-major in (i, j).
struct FieldSlice {
    GridSpec grid;
    FieldMethod method = FieldMethod::full_variational;
    Eigen::Index r = 0;
    Matrix values;                 // x.count x y.count
    std::vector<PointFlag> flags;  // row-major, i * y.count + j
    Metadata metadata;

    PointFlag flag(Eigen::Index i, Eigen::Index j) const { return flags[static_cast<std::size_t>(i * grid.y.count + j)]; }
    std::size_t flagged_count() const;
};

/// Number of worker threads from FTLE_WORKERS, else the hardware concurrency (at least 1).
unsigned default_workers();

struct ScanOptions {
    unsigned workers = 1;
    FdConfig fd;
    /// Run the crossing detector on the full Cauchy-Green history of every point
    /// and mark otherwise-ok points whose pair (crossing_rank, crossing_rank + 1) crosses.
    bool crossing_flags = false;
    std::size_t crossing_rank = 1;
    double crossing_threshold = kDefaultCrossingThreshold;
    CrossingRule crossing_rule = CrossingRule::local_minimum;
};

/// Lambda_1 per grid point via the chosen deformation-gradient method.
/// Failures are recorded in flags; the scan never aborts because of a point.
FieldSlice scan_full(const DynamicalSystem& sys, const GridSpec& grid, GradientMethod method,
                     const IntegratorConfig& cfg, const ScanOptions& options = {});

/// Gamma_1 per grid point from the reduced-order pipeline of rank r.
FieldSlice scan_reduced(const DynamicalSystem& sys, const GridSpec& grid, Eigen::Index r, const IntegratorConfig& cfg,
                        const ScanOptions& options = {});

/// Flags reduced points with Gamma_1 > Lambda_1 + tolerance as exceeds_full.
/// Returns the number of violations.
std::size_t flag_exceeding_points(FieldSlice& reduced, const FieldSlice& full, double tolerance = 1e-6);

/// CSV: `#` header lines (version, metadata), then `x,y,value,flag` rows with 17
/// significant digits. Throws Error with the path on I/O failure.
void write_field(const FieldSlice& slice, const std::filesystem::path& path);
void write_field(const FieldSlice& slice, std::ostream& os);

/// Reads a file written by write_field. Values round-trip bit-exactly.
FieldSlice read_field(const std::filesystem::path& path);

/// Raw companion: two little-endian uint64 (rows, cols) followed by row-major
/// little-endian float64 values.
void write_field_raw(const Matrix& values, const std::filesystem::path& path);
Matrix read_field_raw(const std::filesystem::path& path);

struct CostRow {
    Eigen::Index n = 0;
    Eigen::Index r = 0;
    long long full_equations = 0;
    long long reduced_equations = 0;
    double full_seconds = 0.0;
    double reduced_seconds = 0.0;
};

/// Times full and reduced FTLE computations on random stable banded linear
/// systems of each size in `sizes` (best of `repeats` runs).
std::vector<CostRow> benchmark_scaling(const std::vector<Eigen::Index>& sizes, Eigen::Index r,
                                       const IntegratorConfig& cfg, int repeats = 3);

void write_cost_table(const std::vector<CostRow>& rows, std::ostream& os);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ftle
