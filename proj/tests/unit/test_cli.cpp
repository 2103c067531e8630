#include "ftle/errors.hpp"
#include "ftle/field_scan.hpp"
#include "ftle_cli/app.hpp"
#include "ftle_cli/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace ftle;
using namespace ftle::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "ftle");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path temp_path(const std::string& name) {
    return fs::temp_directory_path() / ("ftle_cli_" + std::to_string(::getpid()) + "_" + name);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

TEST(ConfigText, ParsesKeyValueWithComments) {
    const auto kv = parse_config_text("# header\nmodel = abc  # trailing\n\nT=4\n  grid = z1,z2 0:1:3\n", "f.cfg");
    EXPECT_EQ(kv.at("model"), "abc");
    EXPECT_EQ(kv.at("T"), "4");
    EXPECT_EQ(kv.at("grid"), "z1,z2 0:1:3");
    EXPECT_EQ(kv.size(), 3u);
}

TEST(ConfigText, ReportsLineNumbers) {
    try {
        parse_config_text("T = 4\nbroken line\n", "run.cfg");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos);
    }
    EXPECT_THROW(parse_config_text("T = 4\nT = 5\n", "x"), ConfigError);
    EXPECT_THROW(parse_config_text(" = 5\n", "x"), ConfigError);
}

TEST(Resolve, FlagsOverrideFileAndDefaultsFollowModel) {
    const auto cfg = resolve(Command::field, {{"T", "4"}, {"dt", "0.1"}, {"grid", "z1,z2 0:1:3"}, {"fix", "z3=0"}},
                             {{"T", "2"}, {"output", "x.csv"}});
    EXPECT_EQ(cfg.integrator.horizon, 2.0);
    EXPECT_EQ(cfg.integrator.dt, 0.1);
    EXPECT_EQ(cfg.fd.h, 1e-8);
    EXPECT_EQ(cfg.grid->x.count, 3);
    EXPECT_EQ(cfg.grid->y.max, 1.0);

    const auto cdv = resolve(Command::trace, {}, {{"model", "cdv"}, {"z0", "1.14,0,0,-0.91,0,0"}});
    EXPECT_EQ(cdv.integrator.dt, 0.4);
    EXPECT_EQ(cdv.ranks, (std::vector<Eigen::Index>{1, 2}));

    const auto abc = resolve(Command::trace, {}, {{"z0", "2,0.6,0"}});
    EXPECT_EQ(abc.integrator.horizon, 8.0);
    EXPECT_EQ(abc.integrator.dt, 0.01);
    EXPECT_EQ(abc.output, "-");
}

TEST(Resolve, FieldLevelMessages) {
    auto message = [](Command c, const KeyValues& flags) {
        try {
            resolve(c, {}, flags);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    const KeyValues base{{"grid", "z1,z2 0:1:3"}, {"fix", "z3=0"}, {"output", "o.csv"}};
    auto with = [&](const std::string& k, const std::string& v) {
        KeyValues kv = base;
        kv[k] = v;
        return kv;
    };
    EXPECT_EQ(message(Command::field, with("dt", "0.3")).rfind("T:", 0), 0u);
    EXPECT_EQ(message(Command::field, with("dt", "-1")).rfind("dt:", 0), 0u);
    EXPECT_EQ(message(Command::field, with("grid", "z1,z2 1:0:3")).rfind("grid:", 0), 0u);
    EXPECT_EQ(message(Command::field, with("grid", "z1,z9 0:1:3")).rfind("grid:", 0), 0u);
    EXPECT_EQ(message(Command::field, with("fix", "")).rfind("fix:", 0), 0u);
    EXPECT_EQ(message(Command::field, with("r", "4")).rfind("r:", 0), 0u);
    EXPECT_EQ(message(Command::field, with("mode", "half")).rfind("mode:", 0), 0u);
    EXPECT_EQ(message(Command::field, with("model", "lorenz")).rfind("model:", 0), 0u);
    EXPECT_EQ(message(Command::field, with("param.D", "1")).rfind("param.D:", 0), 0u);
    EXPECT_EQ(message(Command::field, with("colour", "red")).rfind("colour:", 0), 0u);
    KeyValues no_output = base;
    no_output.erase("output");
    EXPECT_EQ(message(Command::field, no_output).rfind("output:", 0), 0u);
    EXPECT_EQ(message(Command::trace, {{"z0", "1,2"}}).rfind("z0:", 0), 0u);
    EXPECT_EQ(message(Command::trace, {}).rfind("z0:", 0), 0u);
    EXPECT_EQ(message(Command::bench, {{"n_list", "1,2"}, {"r", "2"}}).rfind("n_list:", 0), 0u);
    EXPECT_EQ(message(Command::bench, {{"model", "abc"}}).rfind("model:", 0), 0u);
}

TEST(Cli, FieldWritesConstantLinearField) {
    const fs::path out = temp_path("linear.csv");
    const auto r = invoke({"field", "--model", "linear", "--matrix", "diag:1,-1", "--mode", "full", "--method",
                           "variational", "--grid", "z1,z2", "-1:1:5", "--T", "4", "--dt", "0.001", "-o", out.string(),
                           "--workers", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const FieldSlice slice = read_field(out);
    EXPECT_LE((slice.values.array() - 1.0).abs().maxCoeff(), 1e-9);
    const std::string text = slurp(out);
    EXPECT_NE(text.find("# config.T=4\n"), std::string::npos);
    EXPECT_NE(text.find("# config.method=variational\n"), std::string::npos);
    EXPECT_EQ(text.find("workers"), std::string::npos);
    fs::remove(out);
}

TEST(Cli, MissingOutputIsConfigError) {
    const auto r = invoke({"field", "--model", "abc", "--grid", "z1,z2", "0:6.2832:5", "--fix", "z3=0"});
    EXPECT_EQ(r.code, kExitConfig);
    EXPECT_NE(r.err.find("output"), std::string::npos);
}

TEST(Cli, ParseErrorsAreConfigErrors) {
    EXPECT_EQ(invoke({}).code, kExitConfig);
    EXPECT_EQ(invoke({"plot"}).code, kExitConfig);
    EXPECT_EQ(invoke({"field", "--bogus"}).code, kExitConfig);
    EXPECT_EQ(invoke({"--version"}).code, kExitOk);
    EXPECT_EQ(invoke({"field", "--help"}).code, kExitOk);
}

TEST(Cli, ConfigFileWithFlagOverride) {
    const fs::path cfg = temp_path("run.cfg");
    const fs::path out = temp_path("cfg.csv");
    std::ofstream(cfg) << "# desk run\nmodel = abc\nmode = reduced\nr = 2\ngrid = z1,z2 0:6.2832:3\nfix = z3=0\n"
                          "T = 4\ndt = 0.01\noutput = "
                       << out.string() << "\n";
    const auto r = invoke({"field", "--config", cfg.string(), "--T", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string text = slurp(out);
    EXPECT_NE(text.find("# config.T=1\n"), std::string::npos);
    EXPECT_NE(text.find("# method=reduced\n"), std::string::npos);

    std::ofstream(cfg) << "tee = 4\n";
    EXPECT_EQ(invoke({"field", "--config", cfg.string()}).code, kExitConfig);
    EXPECT_EQ(invoke({"field", "--config", temp_path("missing.cfg").string()}).code, kExitConfig);
    fs::remove(cfg);
    fs::remove(out);
}

TEST(Cli, StrictModeFailsOnFlaggedPoints) {
    const fs::path out = temp_path("strict.csv");
    // e^{100 * 8} overflows: every point diverges.
    const std::vector<std::string> base{"field", "--model", "linear", "--matrix", "diag:100,-1", "--method",
                                        "variational", "--grid", "z1,z2", "0:1:2", "-o", out.string()};
    const auto lenient = invoke(base);
    EXPECT_EQ(lenient.code, 0) << lenient.err;
    EXPECT_NE(lenient.out.find("4 flagged"), std::string::npos);
    auto strict_args = base;
    strict_args.push_back("--strict");
    const auto strict = invoke(strict_args);
    EXPECT_EQ(strict.code, kExitRuntime);
    EXPECT_NE(strict.err.find("diverged=4"), std::string::npos);
    fs::remove(out);
}

TEST(Cli, UnwritableOutputIsRuntimeFailure) {
    const auto r = invoke({"field", "--model", "linear", "--matrix", "diag:1,-1", "--grid", "z1,z2", "0:1:2", "--T",
                           "1", "-o", "/nonexistent-dir/out.csv"});
    EXPECT_EQ(r.code, kExitRuntime);
    EXPECT_NE(r.err.find("/nonexistent-dir/out.csv"), std::string::npos);
}

TEST(Cli, TraceColumnsAndCrossingReport) {
    const auto r = invoke({"trace", "--model", "abc", "--z0", "4.0,0.6,0.0", "--r", "1,2", "--T", "2", "--stride", "50"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("# columns=t,Lambda_1,Lambda_2,Lambda_3,Gamma_r1_1,Gamma_r2_1,Gamma_r2_2\n"),
              std::string::npos);
    EXPECT_NE(r.out.find("# crossing pair=1-2"), std::string::npos);
    EXPECT_NE(r.out.find("# crossing pair=2-3"), std::string::npos);
    int rows = 0;
    std::istringstream is(r.out);
    for (std::string line; std::getline(is, line);) {
        if (!line.empty() && line[0] != '#') {
            ++rows;
            EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
        }
    }
    EXPECT_EQ(rows, 4);
}

TEST(Cli, DiagRows) {
    const auto r = invoke({"diag", "--model", "abc", "--z0", "2.0,0.6,0.0", "--pair", "1", "--T", "1", "--stride", "10"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("# columns=t,pair,relative_gap,flagged\n"), std::string::npos);
    EXPECT_NE(r.out.find("\n1,1-2,"), std::string::npos);
}

TEST(Cli, BenchTable) {
    const auto r = invoke({"bench", "--n-list", "10,20", "--r", "2", "--T", "0.1", "--repeats", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("\n10,2,110,34,"), std::string::npos);
    EXPECT_NE(r.out.find("# loglog_slope.full="), std::string::npos);
}

TEST(Cli, IdenticalRunsAreByteIdentical) {
    const fs::path a = temp_path("det_a.csv");
    const fs::path b = temp_path("det_b.csv");
    const std::vector<std::string> args{"field", "--model", "abc", "--mode", "reduced", "--r", "2", "--grid", "z1,z2",
                                        "0:6.2832:6", "--fix", "z3=0", "--T", "2"};
    auto run_with = [&](const fs::path& out, const std::string& workers) {
        auto full = args;
        full.insert(full.end(), {"-o", out.string(), "--workers", workers});
        return invoke(full).code;
    };
    ASSERT_EQ(run_with(a, "1"), 0);
    ASSERT_EQ(run_with(b, "8"), 0);
    EXPECT_EQ(slurp(a), slurp(b));
    fs::remove(a);
    fs::remove(b);
}
