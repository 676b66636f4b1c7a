#pragma once

namespace qport {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qport
