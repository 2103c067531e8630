#include "ftle/field_scan.hpp"

#include "ftle/errors.hpp"
#include "ftle/format.hpp"
#include "ftle/otd.hpp"
#include "ftle/version.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

namespace ftle {

double GridAxis::value(Eigen::Index i) const {
    if (i == count - 1) return max;
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
}

void GridSpec::validate(Eigen::Index dimension) const {
    if (dimension < 2) throw ConfigError("grid: a 2-D slice needs a system of dimension >= 2");
    for (const GridAxis* axis : {&x, &y}) {
        if (axis->count < 2) throw ConfigError("grid: count must be at least 2");
        if (!(axis->min < axis->max)) throw ConfigError("grid: min must be smaller than max");
        if (axis->coordinate < 0 || axis->coordinate >= dimension) {
            throw ConfigError("grid: coordinate z" + std::to_string(axis->coordinate + 1) + " does not exist");
        }
    }
    if (x.coordinate == y.coordinate) throw ConfigError("grid: the two slice coordinates must differ");
    if (fixed.size() != dimension - 2) {
        throw ConfigError("grid: expected " + std::to_string(dimension - 2) + " fixed coordinates, got " +
                          std::to_string(fixed.size()));
    }
}

State GridSpec::point(Eigen::Index i, Eigen::Index j) const {
    const Eigen::Index n = fixed.size() + 2;
    State z(n);
    Eigen::Index next_fixed = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (k == x.coordinate) {
            z(k) = x.value(i);
        } else if (k == y.coordinate) {
            z(k) = y.value(j);
        } else {
            z(k) = fixed(next_fixed++);
        }
    }
    return z;
}

std::string to_string(FieldMethod m) {
    switch (m) {
        case FieldMethod::full_fd: return "full_fd";
        case FieldMethod::full_variational: return "full_variational";
        case FieldMethod::reduced: return "reduced";
    }
    return "unknown";
}

FieldMethod field_method_from_string(const std::string& s) {
    if (s == "full_fd") return FieldMethod::full_fd;
    if (s == "full_variational") return FieldMethod::full_variational;
    if (s == "reduced") return FieldMethod::reduced;
    throw ConfigError("unknown field method '" + s + "'");
}

std::string to_string(PointFlag f) {
    switch (f) {
        case PointFlag::ok: return "ok";
        case PointFlag::crossing: return "crossing";
        case PointFlag::diverged: return "diverged";
        case PointFlag::degenerate_basis: return "degenerate_basis";
        case PointFlag::invalid_spectrum: return "invalid_spectrum";
        case PointFlag::exceeds_full: return "exceeds_full";
        case PointFlag::failed: return "failed";
    }
    return "failed";
}

PointFlag point_flag_from_string(const std::string& s) {
    for (PointFlag f : {PointFlag::ok, PointFlag::crossing, PointFlag::diverged, PointFlag::degenerate_basis,
                        PointFlag::invalid_spectrum, PointFlag::exceeds_full, PointFlag::failed}) {
        if (to_string(f) == s) return f;
    }
    throw Error("unknown point flag '" + s + "'");
}

std::size_t FieldSlice::flagged_count() const {
    return static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(), [](PointFlag f) { return f != PointFlag::ok; }));
}

unsigned default_workers() {
    if (const char* env = std::getenv("FTLE_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct PointResult {
    double value = std::numeric_limits<double>::quiet_NaN();
    PointFlag flag = PointFlag::failed;
};

/// Runs `work(idx)` for every index on `workers` threads. Results are stored by
/// index, so the output does not depend on scheduling.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& work) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) work(i);
        });
    }
}

PointFlag classify(const std::exception_ptr& ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const IntegrationDiverged&) {
        return PointFlag::diverged;
    } catch (const DegenerateBasis&) {
        return PointFlag::degenerate_basis;
    } catch (const InvalidSpectrum&) {
        return PointFlag::invalid_spectrum;
    } catch (const NumericalDegeneracy&) {
        return PointFlag::invalid_spectrum;
    } catch (const PipelineError& e) {
        switch (e.cause()) {
            case PipelineError::Cause::diverged: return PointFlag::diverged;
            case PipelineError::Cause::degenerate_basis: return PointFlag::degenerate_basis;
            case PipelineError::Cause::invalid_spectrum: return PointFlag::invalid_spectrum;
            case PipelineError::Cause::other: return PointFlag::failed;
        }
    } catch (...) {
    }
    return PointFlag::failed;
}

/// Eigenvalue history of the right Cauchy-Green tensor at every step after t0.
CrossingReport crossing_for_point(const DynamicalSystem& sys, const State& z0, const IntegratorConfig& cfg,
                                  const ScanOptions& options) {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> history;
    const auto observer = [&](double t, const State&, const Matrix& grad) {
        times.push_back(t);
        history.push_back(cauchy_green(grad, StrainSide::right).eigenvalues);
    };
    deformation_gradient_variational(sys, z0, cfg, observer);
    return detect_crossing(times, history, options.crossing_rank, options.crossing_threshold, options.crossing_rule);
}

Metadata base_metadata(const DynamicalSystem& sys, const GridSpec& grid, FieldMethod method, Eigen::Index r,
                       const IntegratorConfig& cfg, const ScanOptions& options) {
    Metadata md;
    md.emplace_back("model", sys.name());
    for (const auto& [k, v] : sys.parameters()) md.emplace_back("param." + k, v);
    md.emplace_back("method", to_string(method));
    md.emplace_back("r", std::to_string(r));
    md.emplace_back("t0", format_double(cfg.t0));
    md.emplace_back("T", format_double(cfg.horizon));
    md.emplace_back("dt", format_double(cfg.dt));
    md.emplace_back("scheme", "rk4");
    if (method == FieldMethod::full_fd) md.emplace_back("fd_h", format_double(options.fd.h));
    auto axis = [](const GridAxis& a) {
        return std::to_string(a.coordinate) + "," + format_double(a.min) + "," + format_double(a.max) + "," +
               std::to_string(a.count);
    };
    md.emplace_back("grid.x", axis(grid.x));
    md.emplace_back("grid.y", axis(grid.y));
    std::string fixed;
    for (Eigen::Index k = 0; k < grid.fixed.size(); ++k) fixed += (k ? "," : "") + format_double(grid.fixed(k));
    md.emplace_back("grid.fixed", fixed);
    if (options.crossing_flags) {
        md.emplace_back("crossing.pair", std::to_string(options.crossing_rank));
        md.emplace_back("crossing.threshold", format_double(options.crossing_threshold));
        md.emplace_back("crossing.rule",
                        options.crossing_rule == CrossingRule::local_minimum ? "local_minimum" : "any_sample");
    }
    return md;
}

FieldSlice scan(const DynamicalSystem& sys, const GridSpec& grid, FieldMethod method, Eigen::Index r,
                const IntegratorConfig& cfg, const ScanOptions& options,
                const std::function<double(const State&)>& point_value) {
    grid.validate(sys.dimension());
    cfg.validate();
    FieldSlice slice;
    slice.grid = grid;
    slice.method = method;
    slice.r = r;
    slice.metadata = base_metadata(sys, grid, method, r, cfg, options);

    const auto total = static_cast<std::size_t>(grid.size());
    std::vector<PointResult> results(total);
    parallel_for(total, options.workers, [&](std::size_t idx) {
        const auto i = static_cast<Eigen::Index>(idx) / grid.y.count;
        const auto j = static_cast<Eigen::Index>(idx) % grid.y.count;
        const State z0 = grid.point(i, j);
        PointResult res;
        try {
            res.value = point_value(z0);
            res.flag = std::isfinite(res.value) ? PointFlag::ok : PointFlag::invalid_spectrum;
            if (res.flag == PointFlag::ok && options.crossing_flags) {
                if (crossing_for_point(sys, z0, cfg, options).crossed) res.flag = PointFlag::crossing;
            }
        } catch (...) {
            res.value = std::numeric_limits<double>::quiet_NaN();
            res.flag = classify(std::current_exception());
        }
        results[idx] = res;
    });

    slice.values.resize(grid.x.count, grid.y.count);
    slice.flags.resize(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        const auto i = static_cast<Eigen::Index>(idx) / grid.y.count;
        const auto j = static_cast<Eigen::Index>(idx) % grid.y.count;
        slice.values(i, j) = results[idx].value;
        slice.flags[idx] = results[idx].flag;
    }
    return slice;
}

}  // namespace

FieldSlice scan_full(const DynamicalSystem& sys, const GridSpec& grid, GradientMethod method,
                     const IntegratorConfig& cfg, const ScanOptions& options) {
    const FieldMethod fm = method == GradientMethod::variational ? FieldMethod::full_variational : FieldMethod::full_fd;
    return scan(sys, grid, fm, 0, cfg, options, [&](const State& z0) {
        const DeformationGradient dg = method == GradientMethod::variational
                                           ? deformation_gradient_variational(sys, z0, cfg)
                                           : deformation_gradient_fd(sys, z0, cfg, options.fd);
        return ftle(cauchy_green(dg, StrainSide::right), cfg.horizon, 1).exponents(0);
    });
}

FieldSlice scan_reduced(const DynamicalSystem& sys, const GridSpec& grid, Eigen::Index r, const IntegratorConfig& cfg,
                        const ScanOptions& options) {
    if (r < 1 || r > sys.dimension()) throw ConfigError("OTD rank r must lie in [1, n]");
    return scan(sys, grid, FieldMethod::reduced, r, cfg, options,
                [&](const State& z0) { return reduced_ftle_pipeline(sys, z0, r, cfg).exponents(0); });
}

std::size_t flag_exceeding_points(FieldSlice& reduced, const FieldSlice& full, double tolerance) {
    if (reduced.values.rows() != full.values.rows() || reduced.values.cols() != full.values.cols()) {
        throw ConfigError("flag_exceeding_points: fields have different shapes");
    }
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < reduced.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < reduced.values.cols(); ++j) {
            const auto idx = static_cast<std::size_t>(i * reduced.values.cols() + j);
            const PointFlag f = reduced.flags[idx];
            if (f != PointFlag::ok && f != PointFlag::crossing) continue;
            if (!std::isfinite(full.values(i, j))) continue;
            if (reduced.values(i, j) > full.values(i, j) + tolerance) {
                reduced.flags[idx] = PointFlag::exceeds_full;
                ++count;
            }
        }
    }
    return count;
}

void write_field(const FieldSlice& slice, std::ostream& os) {
    os << "# ftle-field version=" << kVersion << '\n';
    for (const auto& [k, v] : slice.metadata) os << "# " << k << '=' << v << '\n';
    os << "# columns=x,y,value,flag\n";
    for (Eigen::Index i = 0; i < slice.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < slice.values.cols(); ++j) {
            os << format_double(slice.grid.x.value(i)) << ',' << format_double(slice.grid.y.value(j)) << ','
               << format_double(slice.values(i, j)) << ',' << to_string(slice.flag(i, j)) << '\n';
        }
    }
}

void write_field(const FieldSlice& slice, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    write_field(slice, os);
    os.flush();
    if (!os) throw Error("failed writing '" + path.string() + "'");
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) parts.push_back(cur);
    return parts;
}

GridAxis parse_axis(const std::string& text, const std::string& path) {
    const auto parts = split(text, ',');
    if (parts.size() != 4) throw Error(path + ": malformed grid axis '" + text + "'");
    GridAxis a;
    a.coordinate = std::stol(parts[0]);
    a.min = parse_double(parts[1], "grid min");
    a.max = parse_double(parts[2], "grid max");
    a.count = std::stol(parts[3]);
    return a;
}

}  // namespace

FieldSlice read_field(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open '" + path.string() + "' for reading");
    FieldSlice slice;
    std::vector<double> values;
    std::string line;
    bool have_x = false, have_y = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos || line.rfind("# ", 0) != 0) continue;
            const std::string key = line.substr(2, eq - 2);
            const std::string value = line.substr(eq + 1);
            if (key == "ftle-field version" || key == "columns") continue;
            slice.metadata.emplace_back(key, value);
            if (key == "grid.x") {
                slice.grid.x = parse_axis(value, path.string());
                have_x = true;
            } else if (key == "grid.y") {
                slice.grid.y = parse_axis(value, path.string());
                have_y = true;
            } else if (key == "grid.fixed") {
                const auto parts = split(value, ',');
                slice.grid.fixed.resize(static_cast<Eigen::Index>(parts.size()));
                for (std::size_t k = 0; k < parts.size(); ++k) slice.grid.fixed(k) = parse_double(parts[k], "fixed");
            } else if (key == "method") {
                slice.method = field_method_from_string(value);
            } else if (key == "r") {
                slice.r = std::stol(value);
            }
            continue;
        }
        const auto parts = split(line, ',');
        if (parts.size() != 4) throw Error(path.string() + ": malformed row '" + line + "'");
        values.push_back(parse_double(parts[2], "value"));
        slice.flags.push_back(point_flag_from_string(parts[3]));
    }
    if (!have_x || !have_y) throw Error(path.string() + ": missing grid header");
    if (static_cast<Eigen::Index>(values.size()) != slice.grid.size()) {
        throw Error(path.string() + ": row count does not match the grid header");
    }
    slice.values.resize(slice.grid.x.count, slice.grid.y.count);
    for (Eigen::Index i = 0; i < slice.grid.x.count; ++i) {
        for (Eigen::Index j = 0; j < slice.grid.y.count; ++j) {
            slice.values(i, j) = values[static_cast<std::size_t>(i * slice.grid.y.count + j)];
        }
    }
    return slice;
}

namespace {

template <class T>
T to_little_endian(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &v, sizeof(T));
        std::reverse(bytes, bytes + sizeof(T));
        std::memcpy(&v, bytes, sizeof(T));
    }
    return v;
}

}  // namespace

void write_field_raw(const Matrix& values, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    const std::uint64_t dims[2] = {to_little_endian(static_cast<std::uint64_t>(values.rows())),
                                   to_little_endian(static_cast<std::uint64_t>(values.cols()))};
    os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const double v = to_little_endian(values(i, j));
            os.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    }
    if (!os) throw Error("failed writing '" + path.string() + "'");
}

Matrix read_field_raw(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open '" + path.string() + "' for reading");
    std::uint64_t dims[2] = {0, 0};
    is.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!is) throw Error(path.string() + ": truncated header");
    const auto rows = static_cast<Eigen::Index>(to_little_endian(dims[0]));
    const auto cols = static_cast<Eigen::Index>(to_little_endian(dims[1]));
    Matrix values(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            double v = 0.0;
            is.read(reinterpret_cast<char*>(&v), sizeof(v));
            if (!is) throw Error(path.string() + ": truncated data");
            values(i, j) = to_little_endian(v);
        }
    }
    return values;
}

std::vector<CostRow> benchmark_scaling(const std::vector<Eigen::Index>& sizes, Eigen::Index r,
                                       const IntegratorConfig& cfg, int repeats) {
    using clock = std::chrono::steady_clock;
    cfg.validate();
    std::vector<CostRow> rows;
    for (const Eigen::Index n : sizes) {
        if (n < r || r < 1) throw ConfigError("benchmark: need 1 <= r <= n");
        const BandedLinearSystem sys = make_random_stable_banded(n, 1, static_cast<std::uint64_t>(n));
        State z0 = State::Ones(n) / std::sqrt(static_cast<double>(n));
        CostRow row;
        row.n = n;
        row.r = r;
        row.full_equations = full_equation_count(n);
        row.reduced_equations = reduced_equation_count(n, r);
        row.full_seconds = std::numeric_limits<double>::infinity();
        row.reduced_seconds = std::numeric_limits<double>::infinity();
        // An explicit basis keeps the timing about propagation, not the dense initial eigenproblem.
        PipelineOptions options;
        options.initial_modes = Matrix::Identity(n, r);
        for (int rep = 0; rep < std::max(1, repeats); ++rep) {
            auto start = clock::now();
            const auto dg = deformation_gradient_variational(sys, z0, cfg);
            volatile double sink = ftle(cauchy_green(dg, StrainSide::right), cfg.horizon, 1).exponents(0);
            row.full_seconds =
                std::min(row.full_seconds, std::chrono::duration<double>(clock::now() - start).count());

            start = clock::now();
            sink = reduced_ftle_pipeline(sys, z0, r, cfg, options).exponents(0);
            row.reduced_seconds =
                std::min(row.reduced_seconds, std::chrono::duration<double>(clock::now() - start).count());
            (void)sink;
        }
        rows.push_back(row);
    }
    return rows;
}

void write_cost_table(const std::vector<CostRow>& rows, std::ostream& os) {
    os << "n,r,full_equations,reduced_equations,full_seconds,reduced_seconds\n";
    for (const auto& row : rows) {
        os << row.n << ',' << row.r << ',' << row.full_equations << ',' << row.reduced_equations << ','
           << format_double(row.full_seconds) << ',' << format_double(row.reduced_seconds) << '\n';
    }
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("loglog_slope: need at least two matching points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

}  // namespace ftle
