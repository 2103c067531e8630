#pragma once

#include "ftle_cli/config.hpp"

#include <iosfwd>

namespace ftle::cli {

int cmd_field(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_trace(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_diag(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace ftle::cli
