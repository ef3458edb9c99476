#pragma once

namespace glsim {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSeedScheme = "splitmix64-v1";

}  // namespace glsim
