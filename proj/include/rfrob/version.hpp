#pragma once

namespace rfrob {
inline constexpr const char* kVersion = "0.1.0";
}
