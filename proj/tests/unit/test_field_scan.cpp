#include "ftle/errors.hpp"
#include "ftle/field_scan.hpp"
#include "ftle/otd.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <unistd.h>

using namespace ftle;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    return fs::temp_directory_path() / ("ftle_unit_" + std::to_string(::getpid()) + "_" + name);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

GridSpec abc_slice(Eigen::Index count) {
    GridSpec g;
    g.x = {0, 0.0, 2 * std::numbers::pi, count};
    g.y = {1, 0.0, 2 * std::numbers::pi, count};
    g.fixed = State::Zero(1);
    return g;
}

GridSpec plane(Eigen::Index count) {
    GridSpec g;
    g.x = {0, -1.0, 1.0, count};
    g.y = {1, -1.0, 1.0, count};
    g.fixed = State(0);
    return g;
}

class BlowUp final : public DynamicalSystem {
public:
    Eigen::Index dimension() const override { return 2; }
    State vector_field(const State& z, double) const override { return z.array().square(); }
    Matrix jacobian(const State& z, double) const override { return (2.0 * z).asDiagonal(); }
    std::string name() const override { return "blowup"; }
};

}  // namespace

TEST(Grid, InclusiveEndpointsAndPointLayout) {
    const GridAxis axis{0, 0.0, 6.2832, 51};
    EXPECT_EQ(axis.value(0), 0.0);
    EXPECT_EQ(axis.value(50), 6.2832);
    EXPECT_DOUBLE_EQ(axis.value(25), 3.1416);

    GridSpec g;
    g.x = {3, 0.0, 1.0, 3};
    g.y = {0, 10.0, 20.0, 2};
    g.fixed = (State(4) << 7, 8, 9, 6).finished();
    g.validate(6);
    const State p = g.point(2, 1);
    EXPECT_EQ(p, (State(6) << 20, 7, 8, 1.0, 9, 6).finished());
    EXPECT_EQ(g.size(), 6);
}

TEST(Grid, ValidationErrors) {
    GridSpec g = abc_slice(5);
    EXPECT_NO_THROW(g.validate(3));
    EXPECT_THROW(g.validate(4), ConfigError);  // fixed has the wrong length
    g.x.count = 1;
    EXPECT_THROW(g.validate(3), ConfigError);
    g = abc_slice(5);
    g.y.max = g.y.min;
    EXPECT_THROW(g.validate(3), ConfigError);
    g = abc_slice(5);
    g.y.coordinate = 0;
    EXPECT_THROW(g.validate(3), ConfigError);
    g = abc_slice(5);
    g.y.coordinate = 3;
    EXPECT_THROW(g.validate(3), ConfigError);
}

TEST(ScanFull, ZeroFieldGivesZeroField) {
    const LinearSystem zero(Matrix::Zero(2, 2));
    for (auto method : {GradientMethod::variational, GradientMethod::finite_difference}) {
        const auto slice = scan_full(zero, plane(4), method, {0.0, 1.0, 0.1});
        EXPECT_EQ(slice.values, Matrix::Zero(4, 4));
        EXPECT_EQ(slice.flagged_count(), 0u);
    }
}

TEST(ScanFull, UniformLinearFlow) {
    const LinearSystem saddle(Eigen::Vector2d(1.0, -1.0).asDiagonal().toDenseMatrix());
    const auto slice = scan_full(saddle, plane(5), GradientMethod::variational, {0.0, 4.0, 0.001});
    EXPECT_EQ(slice.values.rows(), 5);
    EXPECT_EQ(slice.values.cols(), 5);
    EXPECT_LE((slice.values.array() - 1.0).abs().maxCoeff(), 1e-9);
    EXPECT_EQ(slice.method, FieldMethod::full_variational);
}

TEST(ScanFull, FiniteDifferenceAgreesWithVariationalOnAbcSlice) {
    const AbcFlow abc;
    const IntegratorConfig cfg{0.0, 8.0, 0.01};
    ScanOptions options;
    options.workers = default_workers();
    const auto fd = scan_full(abc, abc_slice(51), GradientMethod::finite_difference, cfg, options);
    const auto var = scan_full(abc, abc_slice(51), GradientMethod::variational, cfg, options);
    EXPECT_EQ(fd.flagged_count(), 0u);
    EXPECT_LE((fd.values - var.values).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(ScanFull, DivergentPointsAreFlaggedNotFatal) {
    GridSpec g = plane(3);
    g.x = {0, 0.0, 1.0, 3};
    const auto slice = scan_full(BlowUp{}, g, GradientMethod::variational, {0.0, 3.0, 0.01});
    // Components starting above 1/3 blow up before t = 3.
    EXPECT_EQ(slice.flag(2, 0), PointFlag::diverged);
    EXPECT_TRUE(std::isnan(slice.values(2, 0)));
    EXPECT_EQ(slice.flag(0, 0), PointFlag::ok);
    for (std::size_t k = 0; k < slice.flags.size(); ++k) {
        const bool finite = std::isfinite(slice.values(static_cast<Eigen::Index>(k) / 3, static_cast<Eigen::Index>(k) % 3));
        EXPECT_EQ(finite, slice.flags[k] == PointFlag::ok || slice.flags[k] == PointFlag::crossing);
    }
}

TEST(ScanReduced, FullRankMatchesFullScan) {
    const AbcFlow abc;
    const IntegratorConfig cfg{0.0, 8.0, 0.01};
    const auto full = scan_full(abc, abc_slice(5), GradientMethod::variational, cfg);
    const auto reduced = scan_reduced(abc, abc_slice(5), 3, cfg);
    EXPECT_LE((full.values - reduced.values).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_EQ(reduced.r, 3);
    EXPECT_THROW(scan_reduced(abc, abc_slice(5), 4, cfg), ConfigError);
}

TEST(ScanReduced, DivergenceFlaggedWithReason) {
    const auto slice = scan_reduced(BlowUp{}, plane(3), 1, {0.0, 3.0, 0.01});
    EXPECT_EQ(slice.flag(2, 2), PointFlag::diverged);
}

TEST(ScanReduced, NeverExceedsFullField) {
    const AbcFlow abc;
    const IntegratorConfig cfg{0.0, 4.0, 0.01};
    const auto full = scan_full(abc, abc_slice(9), GradientMethod::variational, cfg);
    for (Eigen::Index r : {1, 2}) {
        auto reduced = scan_reduced(abc, abc_slice(9), r, cfg);
        EXPECT_EQ(flag_exceeding_points(reduced, full), 0u);
    }
}

TEST(ScanReduced, ExceedingPointsGetFlagged) {
    FieldSlice full, reduced;
    full.grid = reduced.grid = plane(2);
    full.values = Matrix::Constant(2, 2, 1.0);
    reduced.values = Matrix::Constant(2, 2, 1.0);
    reduced.values(1, 0) = 1.1;
    full.flags = reduced.flags = std::vector<PointFlag>(4, PointFlag::ok);
    EXPECT_EQ(flag_exceeding_points(reduced, full), 1u);
    EXPECT_EQ(reduced.flag(1, 0), PointFlag::exceeds_full);
}

TEST(ScanReduced, CrossingFlagsKeepValues) {
    const AbcFlow abc;
    ScanOptions options;
    options.crossing_flags = true;
    const auto slice = scan_reduced(abc, abc_slice(7), 1, {0.0, 8.0, 0.01}, options);
    for (std::size_t k = 0; k < slice.flags.size(); ++k) {
        EXPECT_TRUE(slice.flags[k] == PointFlag::ok || slice.flags[k] == PointFlag::crossing);
        EXPECT_TRUE(std::isfinite(slice.values(static_cast<Eigen::Index>(k) / 7, static_cast<Eigen::Index>(k) % 7)));
    }
}

TEST(Determinism, WorkerCountDoesNotChangeOutput) {
    const AbcFlow abc;
    const IntegratorConfig cfg{0.0, 2.0, 0.01};
    ScanOptions one, eight;
    one.workers = 1;
    eight.workers = 8;
    const auto a = scan_reduced(abc, abc_slice(11), 2, cfg, one);
    const auto b = scan_reduced(abc, abc_slice(11), 2, cfg, eight);
    std::ostringstream sa, sb;
    write_field(a, sa);
    write_field(b, sb);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(DefaultWorkers, ReadsEnvironment) {
    ::setenv("FTLE_WORKERS", "3", 1);
    EXPECT_EQ(default_workers(), 3u);
    ::setenv("FTLE_WORKERS", "zero", 1);
    EXPECT_GE(default_workers(), 1u);
    ::unsetenv("FTLE_WORKERS");
    EXPECT_GE(default_workers(), 1u);
}

TEST(FieldFile, ZeroFieldHasFourRowsAndHeader) {
    const LinearSystem zero(Matrix::Zero(2, 2));
    const auto slice = scan_full(zero, plane(2), GradientMethod::variational, {0.0, 1.0, 0.5});
    std::ostringstream os;
    write_field(slice, os);
    std::istringstream is(os.str());
    std::string line;
    int header = 0, rows = 0;
    bool version = false, columns = false;
    while (std::getline(is, line)) {
        if (line.rfind("#", 0) == 0) {
            ++header;
            version = version || line.find("version=") != std::string::npos;
            columns = columns || line == "# columns=x,y,value,flag";
        } else {
            ++rows;
            EXPECT_EQ(line.substr(line.size() - 5), ",0,ok");
        }
    }
    EXPECT_EQ(rows, 4);
    EXPECT_TRUE(version);
    EXPECT_TRUE(columns);
    EXPECT_GT(header, 5);
}

TEST(FieldFile, RoundTripIsBitExactAndByteStable) {
    const AbcFlow abc;
    auto slice = scan_reduced(abc, abc_slice(6), 1, {0.0, 1.0, 0.01});
    slice.flags[3] = PointFlag::crossing;
    const fs::path p = temp_path("roundtrip.csv");
    write_field(slice, p);
    const FieldSlice back = read_field(p);
    ASSERT_EQ(back.values.rows(), 6);
    for (Eigen::Index i = 0; i < 6; ++i) {
        for (Eigen::Index j = 0; j < 6; ++j) {
            EXPECT_EQ(std::bit_cast<std::uint64_t>(back.values(i, j)), std::bit_cast<std::uint64_t>(slice.values(i, j)));
        }
    }
    EXPECT_EQ(back.flags, slice.flags);
    EXPECT_EQ(back.method, FieldMethod::reduced);
    EXPECT_EQ(back.r, 1);
    EXPECT_EQ(back.grid.x.max, slice.grid.x.max);
    const fs::path q = temp_path("roundtrip2.csv");
    write_field(back, q);
    EXPECT_EQ(slurp(p), slurp(q));
    fs::remove(p);
    fs::remove(q);
}

TEST(FieldFile, IoErrorsNameThePath) {
    FieldSlice slice;
    slice.grid = plane(2);
    slice.values = Matrix::Zero(2, 2);
    slice.flags.assign(4, PointFlag::ok);
    try {
        write_field(slice, fs::path("/nonexistent-dir/field.csv"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/field.csv"), std::string::npos);
    }
    EXPECT_THROW(read_field("/nonexistent-dir/field.csv"), Error);
}

TEST(RawFile, LayoutAndRoundTrip) {
    Matrix values(2, 3);
    values << 1.5, -2.0, 0.0, 1e-300, std::nan(""), 7.25;
    const fs::path p = temp_path("field.raw");
    write_field_raw(values, p);
    const std::string bytes = slurp(p);
    ASSERT_EQ(bytes.size(), 16u + 6u * 8u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 2u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3u);
    for (int k = 1; k < 8; ++k) EXPECT_EQ(bytes[static_cast<std::size_t>(k)], '\0');
    // 1.5 = 0x3FF8000000000000, little-endian.
    EXPECT_EQ(static_cast<unsigned char>(bytes[16 + 7]), 0x3Fu);
    EXPECT_EQ(static_cast<unsigned char>(bytes[16 + 6]), 0xF8u);
    const Matrix back = read_field_raw(p);
    for (Eigen::Index i = 0; i < 2; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) {
            EXPECT_EQ(std::bit_cast<std::uint64_t>(back(i, j)), std::bit_cast<std::uint64_t>(values(i, j)));
        }
    }
    fs::remove(p);
}

TEST(Benchmark, CountsAndTable) {
    const auto rows = benchmark_scaling({10, 20}, 2, {0.0, 0.1, 0.01}, 1);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].full_equations, 110);
    EXPECT_EQ(rows[0].reduced_equations, 34);
    EXPECT_GT(rows[1].full_seconds, 0.0);
    std::ostringstream os;
    write_cost_table(rows, os);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "n,r,full_equations,reduced_equations,full_seconds,reduced_seconds");
    EXPECT_THROW(benchmark_scaling({1}, 2, {0.0, 0.1, 0.01}), ConfigError);
}

TEST(Benchmark, LogLogSlopeOfPowerLaw) {
    std::vector<double> x{50, 100, 200, 400}, y;
    for (double v : x) y.push_back(3.0 * v * v);
    EXPECT_NEAR(loglog_slope(x, y), 2.0, 1e-12);
    EXPECT_THROW(loglog_slope({1.0}, {1.0}), ConfigError);
}
