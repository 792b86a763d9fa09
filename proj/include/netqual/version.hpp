#pragma once

namespace netqual {

inline constexpr const char* kToolName = "netqual";
inline constexpr const char* kVersion = "0.1.0";

} // namespace netqual
