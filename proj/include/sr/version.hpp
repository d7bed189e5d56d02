#pragma once

namespace sr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sr
