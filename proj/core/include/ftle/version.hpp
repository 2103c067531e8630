#pragma once

namespace ftle {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ftle
