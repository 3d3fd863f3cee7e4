#include "tem/csv.hpp"

#include "tem/errors.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tem::csv {

int Table::col(const std::string& name) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

int Table::require_col(const std::string& name) const
{
    const int i = col(name);
    if (i < 0) throw ConfigError("csv: missing column '" + name + "'");
    return i;
}

namespace {

std::string trim(const std::string& s)
{
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

Table read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("csv: cannot open '" + path + "'");

    Table t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::stringstream ss(s);
        std::string cell;
        if (!have_header) {
            while (std::getline(ss, cell, ',')) t.columns.push_back(trim(cell));
            have_header = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(t.columns.size());
        while (std::getline(ss, cell, ',')) {
            const std::string c = trim(cell);
            row.push_back(c.empty() ? 0.0 : std::strtod(c.c_str(), nullptr));
        }
        if (row.size() != t.columns.size())
            throw ConfigError("csv: ragged row in '" + path + "'");
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw ConfigError("csv: empty file '" + path + "'");
    return t;
}

std::string format_double(double v)
{
    char buf[40];
    // Shortest representation that round-trips; stable across runs.
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file(const std::string& path, const Table& table)
{
    std::ofstream out(path);
    if (!out) throw ConfigError("csv: cannot write '" + path + "'");
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out << ',';
        out << table.columns[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
}

} // namespace tem::csv
