#pragma once

namespace rqm {

inline constexpr const char* kToolName = "rqm";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace rqm
