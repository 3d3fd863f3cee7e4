#pragma once

#include <string>
#include <vector>

namespace tem::csv {

// Numeric CSV with a single header row. Values are written with enough
// digits that a read-back reproduces every double bit-exactly.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int col(const std::string& name) const; // -1 if absent
    int require_col(const std::string& name) const;
    std::size_t num_rows() const { return rows.size(); }
};

Table read_file(const std::string& path);
void write_file(const std::string& path, const Table& table);

std::string format_double(double v);

} // namespace tem::csv
