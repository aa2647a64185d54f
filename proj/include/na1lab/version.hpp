#pragma once

namespace na1lab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace na1lab
