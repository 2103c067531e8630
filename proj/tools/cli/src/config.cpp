#include "ftle_cli/config.hpp"

#include "ftle/errors.hpp"
#include "ftle/format.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ftle::cli {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
    return parts;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> parts;
    std::istringstream is(s);
    for (std::string tok; is >> tok;) parts.push_back(tok);
    return parts;
}

[[noreturn]] void bad(const std::string& key, const std::string& message) {
    throw ConfigError(key + ": " + message);
}

long long parse_integer(const std::string& key, const std::string& text) {
    long long v = 0;
    const auto t = trim(text);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) bad(key, "expected an integer, got '" + text + "'");
    return v;
}

double parse_real(const std::string& key, const std::string& text) {
    try {
        return parse_double(text, key);
    } catch (const ConfigError&) {
        bad(key, "expected a number, got '" + text + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& text) {
    const auto t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    bad(key, "expected true or false, got '" + text + "'");
}

/// "z3" -> 2
Eigen::Index parse_coordinate(const std::string& key, const std::string& text, Eigen::Index n) {
    const auto t = trim(text);
    if (t.size() < 2 || t[0] != 'z') bad(key, "expected a coordinate name like z1, got '" + text + "'");
    const long long k = parse_integer(key, t.substr(1));
    if (k < 1 || k > n) bad(key, "coordinate " + t + " does not exist for a system of dimension " + std::to_string(n));
    return static_cast<Eigen::Index>(k - 1);
}

struct ModelDefaults {
    double horizon;
    double dt;
};

ModelDefaults defaults_for(const std::string& model) {
    if (model == "cdv") return {30.0, 0.4};
    return {8.0, 0.01};
}

}  // namespace

KeyValues parse_config_text(std::string_view text, const std::string& source) {
    KeyValues kv;
    std::istringstream is{std::string(text)};
    std::string line;
    for (int number = 1; std::getline(is, line); ++number) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string content = trim(line);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        const std::string where = source + ":" + std::to_string(number);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(content.substr(0, eq));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (kv.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        kv[key] = trim(content.substr(eq + 1));
    }
    return kv;
}

KeyValues read_config_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

std::string to_string(Command c) {
    switch (c) {
        case Command::field: return "field";
        case Command::trace: return "trace";
        case Command::diag: return "diag";
        case Command::bench: return "bench";
    }
    return "field";
}

const std::vector<std::string>& known_keys(Command c) {
    static const std::vector<std::string> field{"model", "matrix", "cdv_as_printed", "mode", "method", "r", "grid",
                                                "fix", "t0", "T", "dt", "fd_h", "output", "raw", "workers", "strict",
                                                "crossing_flags", "threshold", "rule"};
    static const std::vector<std::string> trace{"model", "matrix", "cdv_as_printed", "z0", "r", "k", "t0", "T",
                                                "dt", "stride", "output", "threshold", "rule"};
    static const std::vector<std::string> diag{"model", "matrix", "cdv_as_printed", "z0", "pair", "t0", "T",
                                               "dt", "stride", "output", "threshold", "rule"};
    static const std::vector<std::string> bench{"n_list", "r", "t0", "T", "dt", "repeats", "output"};
    switch (c) {
        case Command::field: return field;
        case Command::trace: return trace;
        case Command::diag: return diag;
        case Command::bench: return bench;
    }
    return field;
}

GridAxis parse_axis_range(const std::string& text, Eigen::Index coordinate) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) bad("grid", "expected min:max:count, got '" + text + "'");
    GridAxis axis;
    axis.coordinate = coordinate;
    axis.min = parse_real("grid", parts[0]);
    axis.max = parse_real("grid", parts[1]);
    axis.count = static_cast<Eigen::Index>(parse_integer("grid", parts[2]));
    if (axis.count < 2) bad("grid", "count must be at least 2");
    if (!(axis.min < axis.max)) bad("grid", "min must be smaller than max in '" + text + "'");
    return axis;
}

RunConfig resolve(Command command, const KeyValues& file, const KeyValues& flags, const ModelRegistry& registry) {
    KeyValues kv = file;
    for (const auto& [k, v] : flags) kv[k] = v;

    const auto& keys = known_keys(command);
    const bool model_keys_allowed = command != Command::bench;
    for (const auto& [k, v] : kv) {
        const bool known = std::find(keys.begin(), keys.end(), k) != keys.end() ||
                           (model_keys_allowed && k.rfind("param.", 0) == 0);
        if (!known) bad(k, "unknown setting for '" + to_string(command) + "'");
    }

    RunConfig cfg;
    cfg.command = command;
    auto get = [&](const std::string& key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto set_default = [&](const std::string& key, const std::string& value) { kv.try_emplace(key, value); };

    if (command != Command::bench) {
        set_default("model", "abc");
        cfg.model = *get("model");
        if (!registry.contains(cfg.model)) bad("model", "unknown model '" + cfg.model + "'");
        ParamMap params;
        for (const auto& [k, v] : kv) {
            if (k.rfind("param.", 0) == 0) params[k.substr(6)] = v;
            if (k == "matrix") params["matrix"] = v;
            if (k == "cdv_as_printed") params["cdv_as_printed"] = parse_bool(k, v) ? "true" : "false";
        }
        if (cfg.model == "linear" && !params.count("matrix")) bad("matrix", "required for the linear model");
        try {
            cfg.system = registry.make(cfg.model, params);
        } catch (const ConfigError& e) {
            const std::string what = e.what();
            for (const auto& [k, v] : params) {
                if (k != "matrix" && k != "cdv_as_printed" && what.find("'" + k + "'") != std::string::npos) {
                    bad("param." + k, what);
                }
            }
            bad("model", what);
        }
        const auto d = defaults_for(cfg.model);
        set_default("T", format_double(d.horizon));
        set_default("dt", format_double(d.dt));
    } else {
        set_default("T", "1");
        set_default("dt", "0.01");
        set_default("r", "1");
        set_default("n_list", "50,100,200,400");
        set_default("repeats", "3");
    }
    set_default("t0", "0");

    cfg.integrator.t0 = parse_real("t0", *get("t0"));
    cfg.integrator.horizon = parse_real("T", *get("T"));
    cfg.integrator.dt = parse_real("dt", *get("dt"));
    if (!(cfg.integrator.dt > 0.0)) bad("dt", "must be positive");
    if (!(cfg.integrator.horizon > 0.0)) bad("T", "must be positive");
    try {
        cfg.integrator.validate();
    } catch (const ConfigError& e) {
        bad("T", e.what());
    }

    if (command == Command::trace || command == Command::diag || command == Command::field) {
        set_default("threshold", format_double(kDefaultCrossingThreshold));
        set_default("rule", "local_minimum");
        cfg.crossing_threshold = parse_real("threshold", *get("threshold"));
        if (!(cfg.crossing_threshold > 0.0)) bad("threshold", "must be positive");
        const std::string& rule = *get("rule");
        if (rule == "local_minimum") {
            cfg.crossing_rule = CrossingRule::local_minimum;
        } else if (rule == "any_sample") {
            cfg.crossing_rule = CrossingRule::any_sample;
        } else {
            bad("rule", "expected local_minimum or any_sample, got '" + rule + "'");
        }
    }

    const Eigen::Index n = cfg.system ? cfg.system->dimension() : 0;

    auto parse_ranks = [&](Eigen::Index upper) {
        cfg.ranks.clear();
        for (const auto& part : split(*get("r"), ',')) {
            const long long r = parse_integer("r", part);
            if (r < 1 || (upper > 0 && r > upper)) {
                bad("r", "must lie in [1, " + (upper > 0 ? std::to_string(upper) : std::string("n")) + "], got " +
                             part);
            }
            cfg.ranks.push_back(static_cast<Eigen::Index>(r));
        }
        if (cfg.ranks.empty()) bad("r", "no rank given");
    };

    auto parse_z0 = [&] {
        const std::string* z0 = get("z0");
        if (!z0) bad("z0", "an initial point is required");
        const auto parts = split(*z0, ',');
        if (static_cast<Eigen::Index>(parts.size()) != n) {
            bad("z0", "expected " + std::to_string(n) + " components, got " + std::to_string(parts.size()));
        }
        State z(n);
        for (Eigen::Index i = 0; i < n; ++i) z(i) = parse_real("z0", parts[static_cast<std::size_t>(i)]);
        cfg.z0 = z;
    };

    auto parse_stride = [&] {
        set_default("stride", "1");
        const long long s = parse_integer("stride", *get("stride"));
        if (s < 1) bad("stride", "must be at least 1");
        cfg.stride = static_cast<std::size_t>(s);
    };

    auto require_output = [&](bool allow_stdout) {
        if (allow_stdout) set_default("output", "-");
        const std::string* out = get("output");
        if (!out || out->empty()) bad("output", "an output path is required (-o)");
        cfg.output = *out;
    };

    switch (command) {
        case Command::field: {
            set_default("mode", "full");
            set_default("method", "fd");
            set_default("fd_h", "1e-08");
            set_default("r", "1");
            set_default("strict", "false");
            set_default("crossing_flags", "false");
            const std::string& mode = *get("mode");
            if (mode != "full" && mode != "reduced") bad("mode", "expected full or reduced, got '" + mode + "'");
            cfg.reduced = mode == "reduced";
            const std::string& method = *get("method");
            if (method == "fd") {
                cfg.method = GradientMethod::finite_difference;
            } else if (method == "variational") {
                cfg.method = GradientMethod::variational;
            } else {
                bad("method", "expected fd or variational, got '" + method + "'");
            }
            cfg.fd.h = parse_real("fd_h", *get("fd_h"));
            if (!(cfg.fd.h > 0.0)) bad("fd_h", "must be positive");
            parse_ranks(n);
            if (cfg.ranks.size() != 1) bad("r", "field takes a single rank");
            cfg.strict = parse_bool("strict", *get("strict"));
            cfg.crossing_flags = parse_bool("crossing_flags", *get("crossing_flags"));
            if (cfg.crossing_flags && n < 2) bad("crossing_flags", "needs a system of dimension >= 2");

            const std::string* grid = get("grid");
            if (!grid) bad("grid", "a grid is required, e.g. z1,z2 0:6.2832:51");
            const auto tokens = split_ws(*grid);
            if (tokens.size() != 2 && tokens.size() != 3) {
                bad("grid", "expected 'zA,zB min:max:count [min:max:count]', got '" + *grid + "'");
            }
            const auto coords = split(tokens[0], ',');
            if (coords.size() != 2) bad("grid", "expected two coordinates, got '" + tokens[0] + "'");
            GridSpec spec;
            spec.x = parse_axis_range(tokens[1], parse_coordinate("grid", coords[0], n));
            spec.y = parse_axis_range(tokens.size() == 3 ? tokens[2] : tokens[1],
                                      parse_coordinate("grid", coords[1], n));
            if (spec.x.coordinate == spec.y.coordinate) bad("grid", "the two coordinates must differ");

            std::map<Eigen::Index, double> fixed;
            if (const std::string* fix = get("fix")) {
                for (const auto& item : split(*fix, ',')) {
                    if (item.empty()) continue;
                    const auto eq = item.find('=');
                    if (eq == std::string::npos) bad("fix", "expected zK=value, got '" + item + "'");
                    const Eigen::Index k = parse_coordinate("fix", item.substr(0, eq), n);
                    if (k == spec.x.coordinate || k == spec.y.coordinate) {
                        bad("fix", item.substr(0, eq) + " is a grid coordinate");
                    }
                    if (fixed.count(k)) bad("fix", item.substr(0, eq) + " given twice");
                    fixed[k] = parse_real("fix", item.substr(eq + 1));
                }
            }
            spec.fixed.resize(n - 2);
            Eigen::Index next = 0;
            for (Eigen::Index k = 0; k < n; ++k) {
                if (k == spec.x.coordinate || k == spec.y.coordinate) continue;
                const auto it = fixed.find(k);
                if (it == fixed.end()) bad("fix", "no value for z" + std::to_string(k + 1));
                spec.fixed(next++) = it->second;
            }
            spec.validate(n);
            cfg.grid = spec;

            require_output(false);
            if (const std::string* raw = get("raw")) cfg.raw_output = *raw;
            if (const std::string* w = get("workers")) {
                const long long v = parse_integer("workers", *w);
                if (v < 1) bad("workers", "must be at least 1");
                cfg.workers = static_cast<unsigned>(v);
            } else {
                cfg.workers = default_workers();
            }
            break;
        }
        case Command::trace: {
            set_default("r", n >= 2 ? "1,2" : "1");
            set_default("k", std::to_string(n));
            parse_z0();
            parse_ranks(n);
            const long long k = parse_integer("k", *get("k"));
            if (k < 1 || k > n) bad("k", "must lie in [1, " + std::to_string(n) + "]");
            cfg.exponent_count = static_cast<Eigen::Index>(k);
            parse_stride();
            require_output(true);
            break;
        }
        case Command::diag: {
            if (n < 2) bad("model", "crossing diagnostics need a system of dimension >= 2");
            parse_z0();
            if (const std::string* pair = get("pair")) {
                for (const auto& part : split(*pair, ',')) {
                    const long long p = parse_integer("pair", part);
                    if (p < 1 || p >= n) bad("pair", "must lie in [1, " + std::to_string(n - 1) + "], got " + part);
                    cfg.pairs.push_back(static_cast<std::size_t>(p));
                }
            } else {
                for (Eigen::Index p = 1; p < n; ++p) cfg.pairs.push_back(static_cast<std::size_t>(p));
            }
            parse_stride();
            require_output(true);
            break;
        }
        case Command::bench: {
            parse_ranks(0);
            if (cfg.ranks.size() != 1) bad("r", "bench takes a single rank");
            for (const auto& part : split(*get("n_list"), ',')) {
                const long long v = parse_integer("n_list", part);
                if (v < cfg.ranks.front()) bad("n_list", "every n must be at least r, got " + part);
                cfg.n_list.push_back(static_cast<Eigen::Index>(v));
            }
            if (cfg.n_list.empty()) bad("n_list", "no sizes given");
            const long long reps = parse_integer("repeats", *get("repeats"));
            if (reps < 1) bad("repeats", "must be at least 1");
            cfg.repeats = static_cast<int>(reps);
            require_output(true);
            break;
        }
    }

    cfg.resolved = kv;
    if (cfg.system) {
        for (const auto& [k, v] : cfg.system->parameters()) cfg.resolved["param." + k] = v;
        cfg.resolved.erase("cdv_as_printed");
        cfg.resolved.erase("matrix");
    }
    return cfg;
}

std::vector<std::pair<std::string, std::string>> header_entries(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> entries;
    entries.emplace_back("command", to_string(cfg.command));
    for (const auto& [k, v] : cfg.resolved) {
        if (k == "output" || k == "raw" || k == "workers") continue;
        entries.emplace_back(k, v);
    }
    return entries;
}

}  // namespace ftle::cli
