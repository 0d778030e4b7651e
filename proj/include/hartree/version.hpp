#pragma once

namespace hartree {

inline constexpr const char* kVersion = "0.1.0";

}
