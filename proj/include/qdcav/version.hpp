#pragma once

namespace qdcav {

inline constexpr const char* tool_name = "qdcav";
inline constexpr const char* tool_version = "0.1.0";

}  // namespace qdcav
