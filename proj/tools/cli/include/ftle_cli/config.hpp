#pragma once

#include "ftle/diagnostics.hpp"
#include "ftle/field_scan.hpp"
#include "ftle/integrators.hpp"
#include "ftle/models.hpp"
#include "ftle/tangent.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ftle::cli {

/// Raw string settings keyed by config name (`T`, `dt`, `grid`, `param.A`, ...).
using KeyValues = std::map<std::string, std::string>;

/// Flat `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Throws ConfigError naming `source` and the line number.
KeyValues parse_config_text(std::string_view text, const std::string& source);
KeyValues read_config_file(const std::filesystem::path& path);

enum class Command { field, trace, diag, bench };

std::string to_string(Command c);

/// Fully validated settings of one run. `resolved` holds every effective key,
/// defaults included, for echoing into output headers.
struct RunConfig {
    Command command = Command::field;
    std::string model = "abc";
    SystemPtr system;

    bool reduced = false;  // field: --mode reduced
    GradientMethod method = GradientMethod::finite_difference;
    std::vector<Eigen::Index> ranks{1};
    IntegratorConfig integrator;
    FdConfig fd;

    std::optional<GridSpec> grid;
    std::optional<State> z0;

    std::string output;  // "-" is stdout
    std::string raw_output;
    unsigned workers = 1;
    bool strict = false;

    bool crossing_flags = false;
    double crossing_threshold = kDefaultCrossingThreshold;
    CrossingRule crossing_rule = CrossingRule::local_minimum;

    Eigen::Index exponent_count = 0;  // trace: Lambda_1..k, 0 means n
    std::size_t stride = 1;           // trace/diag: keep every stride-th step
    std::vector<std::size_t> pairs;   // diag: 1-based r of pairs (r, r+1); empty means all

    std::vector<Eigen::Index> n_list;
    int repeats = 3;

    KeyValues resolved;
};

/// Keys each command accepts; anything else is rejected.
const std::vector<std::string>& known_keys(Command c);

/// Merges defaults, the config file and command-line flags (flags win), then
/// validates. Throws ConfigError with the offending key in the message.
RunConfig resolve(Command command, const KeyValues& file, const KeyValues& flags,
                  const ModelRegistry& registry = ModelRegistry::with_builtin_models());

/// Parses `min:max:count` with inclusive endpoints.
GridAxis parse_axis_range(const std::string& text, Eigen::Index coordinate);

/// Entries of `resolved` that belong in output headers (no paths, no worker count).
std::vector<std::pair<std::string, std::string>> header_entries(const RunConfig& cfg);

}  // namespace ftle::cli
