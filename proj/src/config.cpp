#include "tem/config.hpp"

#include "tem/csv.hpp"
#include "tem/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tem::config {

namespace {

std::string trim(const std::string& s)
{
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

File File::parse_string(const std::string& text)
{
    File f;
    std::stringstream in(text);
    std::string line;
    std::string section = "global";
    while (std::getline(in, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string s = trim(line);
        if (s.empty()) continue;
        if (s.front() == '[' && s.back() == ']') {
            section = trim(s.substr(1, s.size() - 2));
            if (!f.data_.count(section)) f.order_.push_back(section);
            f.data_[section];
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("config: expected 'key = value': " + s);
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        if (!f.data_.count(section)) f.order_.push_back(section);
        f.data_[section][key] = val;
    }
    return f;
}

File File::parse(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

bool File::has(const std::string& section, const std::string& key) const
{
    auto it = data_.find(section);
    return it != data_.end() && it->second.count(key) > 0;
}

std::string File::get_str(const std::string& section, const std::string& key) const
{
    auto it = data_.find(section);
    if (it == data_.end() || !it->second.count(key))
        throw ConfigError("config: missing [" + section + "] " + key);
    return it->second.at(key);
}

std::string File::get_str(const std::string& section, const std::string& key,
                          const std::string& fallback) const
{
    return has(section, key) ? get_str(section, key) : fallback;
}

double File::get_num(const std::string& section, const std::string& key) const
{
    const std::string v = get_str(section, key);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str()) throw ConfigError("config: [" + section + "] " + key + " is not numeric");
    return x;
}

double File::get_num(const std::string& section, const std::string& key, double fallback) const
{
    return has(section, key) ? get_num(section, key) : fallback;
}

int File::get_int(const std::string& section, const std::string& key, int fallback) const
{
    return has(section, key) ? static_cast<int>(get_num(section, key)) : fallback;
}

bool File::get_bool(const std::string& section, const std::string& key, bool fallback) const
{
    if (!has(section, key)) return fallback;
    std::string v = get_str(section, key);
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config: [" + section + "] " + key + " is not a boolean");
}

std::vector<double> File::get_list(const std::string& section, const std::string& key) const
{
    const std::string v = get_str(section, key);
    std::vector<double> out;
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const std::string c = trim(cell);
        if (c.empty()) continue;
        out.push_back(std::strtod(c.c_str(), nullptr));
    }
    return out;
}

std::vector<double> File::get_list(const std::string& section, const std::string& key,
                                   const std::vector<double>& fallback) const
{
    return has(section, key) ? get_list(section, key) : fallback;
}

void File::set(const std::string& section, const std::string& key, const std::string& value)
{
    if (!data_.count(section)) order_.push_back(section);
    data_[section][key] = value;
}

void File::set_num(const std::string& section, const std::string& key, double value)
{
    set(section, key, csv::format_double(value));
}

void File::set_list(const std::string& section, const std::string& key,
                    const std::vector<double>& values)
{
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ", ";
        s += csv::format_double(values[i]);
    }
    set(section, key, s);
}

std::vector<std::string> File::sections() const { return order_; }

const std::map<std::string, std::string>* File::section(const std::string& name) const
{
    auto it = data_.find(name);
    return it == data_.end() ? nullptr : &it->second;
}

std::string File::to_string() const
{
    std::stringstream out;
    for (const auto& sec : order_) {
        out << '[' << sec << "]\n";
        for (const auto& [k, v] : data_.at(sec)) out << k << " = " << v << '\n';
        out << '\n';
    }
    return out.str();
}

void File::write(const std::string& path) const
{
    std::ofstream out(path);
    if (!out) throw ConfigError("config: cannot write '" + path + "'");
    out << to_string();
}

} // namespace tem::config
