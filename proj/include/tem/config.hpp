#pragma once

#include <map>
#include <string>
#include <vector>

namespace tem::config {

// INI-style key/value file: `[section]` headers, `key = value` lines,
// `#` comments. Values are scalars, strings, or comma-separated lists.
class File {
public:
    File() = default;
    static File parse(const std::string& path);
    static File parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;

    std::string get_str(const std::string& section, const std::string& key) const;
    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
    double get_num(const std::string& section, const std::string& key) const;
    double get_num(const std::string& section, const std::string& key, double fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& section, const std::string& key) const;
    std::vector<double> get_list(const std::string& section, const std::string& key,
                                 const std::vector<double>& fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_num(const std::string& section, const std::string& key, double value);
    void set_list(const std::string& section, const std::string& key,
                  const std::vector<double>& values);

    std::vector<std::string> sections() const;
    const std::map<std::string, std::string>* section(const std::string& name) const;

    void write(const std::string& path) const;
    std::string to_string() const;

private:
    // section -> key -> raw value; section order preserved for writing
    std::map<std::string, std::map<std::string, std::string>> data_;
    std::vector<std::string> order_;
};

} // namespace tem::config
