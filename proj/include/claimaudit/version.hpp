#pragma once

namespace claimaudit {

inline constexpr const char* kToolName = "claimaudit";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace claimaudit
