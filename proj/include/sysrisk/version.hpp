#pragma once

namespace sysrisk {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sysrisk
