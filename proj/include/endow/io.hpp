#pragma once

#include <string>
#include <vector>

namespace endow {

/// Shortest text for a double with 17 significant digits.
std::string fmt17(double v);

/// Writes through a temporary file in the same directory and renames it.
void write_atomic(const std::string& path, const std::string& content);

/// CSV with a header line; every value printed with 17 significant digits.
std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns);

}  // namespace endow
