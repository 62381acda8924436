#include "kinlab/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kinlab {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

void ConfigSection::set(const std::string& key, const std::string& value) {
    if (kv_.count(key))
        throw std::invalid_argument("config: duplicate key '" + key + "' in section [" + name_ + "]");
    kv_[key] = value;
}

std::string ConfigSection::get_string(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    used_.insert(key);
    return it->second;
}

double ConfigSection::get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    used_.insert(key);
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' is not a number: " + it->second);
    }
}

int ConfigSection::get_int(const std::string& key, int fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    used_.insert(key);
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' is not an integer: " + it->second);
    }
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    used_.insert(key);
    if (it->second == "true" || it->second == "1" || it->second == "on") return true;
    if (it->second == "false" || it->second == "0" || it->second == "off") return false;
    throw std::invalid_argument("config: key '" + key + "' is not a boolean: " + it->second);
}

std::vector<double> ConfigSection::get_double_list(const std::string& key,
                                                   const std::vector<double>& fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    used_.insert(key);
    std::vector<double> out;
    for (const auto& tok : split_list(it->second)) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw std::invalid_argument("config: list key '" + key + "' has non-number: " + tok);
        }
    }
    return out;
}

std::vector<int> ConfigSection::get_int_list(const std::string& key,
                                             const std::vector<int>& fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    used_.insert(key);
    std::vector<int> out;
    for (const auto& tok : split_list(it->second)) {
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw std::invalid_argument("config: list key '" + key + "' has non-integer: " + tok);
        }
    }
    return out;
}

void ConfigSection::finish() const {
    std::string unknown;
    for (const auto& [key, value] : kv_) {
        (void)value;
        if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    }
    if (!unknown.empty())
        throw std::invalid_argument("config: unknown key(s) in section [" + name_ + "]: " + unknown);
}

ConfigSection* Config::find(const std::string& name) {
    for (auto& s : sections)
        if (s.name() == name) return &s;
    return nullptr;
}

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    ConfigSection* cur = nullptr;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: malformed section header at line " +
                                            std::to_string(lineno));
            cfg.sections.emplace_back(trim(line.substr(1, line.size() - 2)));
            cur = &cfg.sections.back();
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(lineno));
        if (!cur) throw std::invalid_argument("config: key outside any section at line " +
                                              std::to_string(lineno));
        cur->set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

}  // namespace kinlab
