#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pvrisk::csv {

std::vector<std::string_view> split(std::string_view line, char delim = ',');
std::string_view trim(std::string_view s);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Parses a number; empty, "nan" and "NaN" give quiet NaN. Returns false on
/// garbage.
bool parse_double(std::string_view s, double& out);

}  // namespace pvrisk::csv
