#pragma once

namespace cgc {

inline constexpr const char* kToolkitVersion = "0.1.0";

}  // namespace cgc
