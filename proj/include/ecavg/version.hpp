#pragma once

namespace ecavg {

inline constexpr const char* version = "0.1.0";

}  // namespace ecavg
