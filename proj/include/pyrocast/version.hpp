#pragma once

namespace pyrocast {

inline constexpr const char* kToolkitVersion = "0.1.0";

}  // namespace pyrocast
