#pragma once

#include <string>

namespace sumlab {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace sumlab
