#pragma once

namespace mln {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mln
