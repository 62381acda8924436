#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace kinlab {

/// One [section] of a key = value config file. Reads mark keys as consumed;
/// finish() rejects anything left over, so misspelled keys fail loudly.
class ConfigSection {
public:
    ConfigSection() = default;
    explicit ConfigSection(std::string name) : name_(std::move(name)) {}

    const std::string& name() const { return name_; }
    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

    /// Throws if any key was never consumed (unknown keys are errors).
    void finish() const;

private:
    std::string name_;
    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> used_;
};

struct Config {
    std::vector<ConfigSection> sections;

    ConfigSection* find(const std::string& name);
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);
};

}  // namespace kinlab
