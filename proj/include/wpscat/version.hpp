#pragma once

namespace wpscat {

inline constexpr const char* kToolkitName = "wpscat";
inline constexpr const char* kToolkitVersion = "0.1.0";

}  // namespace wpscat
