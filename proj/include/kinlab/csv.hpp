#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace kinlab {

/// CSV with a header row, '.' decimal separator and 17 significant digits,
/// enough for doubles to round-trip exactly.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);
    void row(const std::vector<std::string>& cells);

    static std::string num(double v);
    static std::string num(int v);

private:
    std::ofstream out_;
};

std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace kinlab
