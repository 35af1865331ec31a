#pragma once

#include <string>

namespace hydrolimit {

/// Shortest decimal that parses back to exactly `x` (0.5 -> "0.5", 1.0 -> "1").
std::string format_real(double x);

}  // namespace hydrolimit
