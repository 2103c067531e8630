#include "ftle_cli/app.hpp"

#include "ftle/errors.hpp"
#include "ftle/version.hpp"
#include "ftle_cli/commands.hpp"
#include "ftle_cli/config.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>

namespace ftle::cli {

namespace {

/// One sub-command's flags, collected as raw strings under their config keys.
struct Collected {
    std::map<std::string, std::vector<std::string>> values;
    std::vector<std::string> params;
    std::string config_path;
    bool strict = false;
    bool crossing_flags = false;
    bool cdv_as_printed = false;

    KeyValues to_key_values(const CLI::App& sub) const {
        KeyValues kv;
        for (const auto& [key, vals] : values) {
            if (vals.empty()) continue;
            const char sep = (key == "grid") ? ' ' : ',';
            std::string joined;
            for (std::size_t i = 0; i < vals.size(); ++i) joined += (i ? std::string(1, sep) : "") + vals[i];
            kv[key] = joined;
        }
        for (const auto& p : params) {
            const auto eq = p.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError("param: expected KEY=VALUE, got '" + p + "'");
            kv["param." + p.substr(0, eq)] = p.substr(eq + 1);
        }
        auto given = [&](const char* name) {
            const CLI::Option* opt = sub.get_option_no_throw(name);
            return opt != nullptr && opt->count() > 0;
        };
        if (given("--strict")) kv["strict"] = strict ? "true" : "false";
        if (given("--crossing-flags")) kv["crossing_flags"] = crossing_flags ? "true" : "false";
        if (given("--cdv-as-printed")) kv["cdv_as_printed"] = cdv_as_printed ? "true" : "false";
        return kv;
    }
};

struct OptionSpec {
    const char* key;
    const char* flag;
    const char* help;
    bool repeatable = false;
};

// Flags shared by several commands; each command picks the ones whose key it knows.
const std::vector<OptionSpec>& option_specs() {
    static const std::vector<OptionSpec> specs{
        {"model", "--model", "Model name: abc, cdv or linear"},
        {"matrix", "--matrix", "Matrix of the linear model: diag:a,b,... or rows:a,b;c,d"},
        {"mode", "--mode", "full or reduced"},
        {"method", "--method", "Deformation gradient for full mode: fd or variational"},
        {"r", "--r", "OTD rank (trace accepts a list, e.g. 1,2)", true},
        {"grid", "--grid", "Slice: zA,zB min:max:count [min:max:count]", true},
        {"fix", "--fix", "Fixed coordinate zK=value (repeatable)", true},
        {"z0", "--z0", "Initial point, comma separated", true},
        {"k", "--k", "Number of full exponents in the trace"},
        {"pair", "--pair", "Eigenvalue pairs r (for r, r+1) to diagnose", true},
        {"t0", "--t0", "Initial time"},
        {"T", "--T", "Horizon"},
        {"dt", "--dt", "RK4 step"},
        {"fd_h", "--fd-h", "Finite-difference step"},
        {"stride", "--stride", "Write every stride-th step"},
        {"threshold", "--threshold", "Relative-gap threshold of the crossing detector"},
        {"rule", "--rule", "Crossing rule: local_minimum or any_sample"},
        {"output", "-o,--output", "Output path ('-' for stdout where allowed)"},
        {"raw", "--raw", "Companion raw binary field path"},
        {"workers", "--workers", "Worker threads (default: FTLE_WORKERS or hardware concurrency)"},
        {"n_list", "--n-list", "Benchmark sizes, comma separated", true},
        {"repeats", "--repeats", "Benchmark repetitions (best time kept)"},
    };
    return specs;
}

CLI::App* add_command(CLI::App& app, Command command, const std::string& description, Collected& c) {
    CLI::App* sub = app.add_subcommand(to_string(command), description);
    const auto& keys = known_keys(command);
    auto knows = [&](const std::string& k) { return std::find(keys.begin(), keys.end(), k) != keys.end(); };
    for (const auto& spec : option_specs()) {
        if (!knows(spec.key)) continue;
        auto* opt = sub->add_option(spec.flag, c.values[spec.key], spec.help);
        if (spec.repeatable) {
            opt->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
        } else {
            opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->expected(1);
        }
    }
    if (command != Command::bench) {
        sub->add_option("--param", c.params, "Model parameter override KEY=VALUE (repeatable)");
        sub->add_flag("--cdv-as-printed", c.cdv_as_printed, "Use z2 in the z6 equation of the CDV model");
    }
    if (knows("strict")) sub->add_flag("--strict", c.strict, "Exit nonzero if any grid point is flagged");
    if (knows("crossing_flags")) {
        sub->add_flag("--crossing-flags", c.crossing_flags, "Flag points whose strain eigenvalues cross");
    }
    sub->add_option("--config", c.config_path, "Config file of key = value lines; flags override it");
    return sub;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Finite-time Lyapunov exponents: full and reduced-order (OTD) computation", "ftle"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::map<Command, Collected> collected;
    std::map<Command, CLI::App*> subs;
    subs[Command::field] = add_command(app, Command::field, "Compute an FTLE field over a 2-D grid slice",
                                       collected[Command::field]);
    subs[Command::trace] = add_command(app, Command::trace, "FTLE versus horizon along one trajectory",
                                       collected[Command::trace]);
    subs[Command::diag] = add_command(app, Command::diag, "Eigenvalue-crossing diagnostics along one trajectory",
                                      collected[Command::diag]);
    subs[Command::bench] = add_command(app, Command::bench, "Full vs reduced cost scaling table",
                                       collected[Command::bench]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    for (const auto& [command, sub] : subs) {
        if (!sub->parsed()) continue;
        const Collected& c = collected[command];
        try {
            const KeyValues file = c.config_path.empty() ? KeyValues{} : read_config_file(c.config_path);
            const RunConfig cfg = resolve(command, file, c.to_key_values(*sub));
            switch (command) {
                case Command::field: return cmd_field(cfg, out, err);
                case Command::trace: return cmd_trace(cfg, out, err);
                case Command::diag: return cmd_diag(cfg, out, err);
                case Command::bench: return cmd_bench(cfg, out, err);
            }
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << '\n';
            return kExitConfig;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return kExitRuntime;
        }
    }
    return kExitConfig;
}

}  // namespace ftle::cli
