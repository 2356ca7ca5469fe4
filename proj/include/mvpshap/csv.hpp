#pragma once

#include <string>
#include <vector>

namespace mvpshap {

// Minimal CSV handling for the file formats used by this project.
// Fields never contain commas or quotes, so no quoting support.
std::vector<std::string> split_csv_line(const std::string& line);

std::string join_csv(const std::vector<std::string>& fields);

// Shortest representation that round-trips a double exactly.
std::string format_double(double value);

}  // namespace mvpshap
