#pragma once

namespace cst {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cst
