#pragma once

#define HSR_VERSION "1.0.0"

namespace hsr {

inline constexpr const char* version = HSR_VERSION;

} // namespace hsr
