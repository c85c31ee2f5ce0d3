#include "rdlab/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rdlab {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text, const std::string& name) {
    KeyValueConfig cfg;
    cfg.name_ = name;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::string t = trim(line);
        if (t.empty())
            continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + t + "'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
        cfg.entries_.emplace_back(key, value);
    }
    cfg.used_.assign(cfg.entries_.size(), false);
    return cfg;
}

bool KeyValueConfig::has(const std::string& key) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].first == key)
            return true;
    return false;
}

int KeyValueConfig::line_of(const std::string& key) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].first == key)
            return static_cast<int>(i) + 1;
    return 0;
}

std::string KeyValueConfig::get_string(const std::string& key) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].first == key) {
            used_[i] = true;
            return entries_[i].second;
        }
    }
    throw ConfigError(name_ + ": missing required key '" + key + "'");
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double KeyValueConfig::get_double(const std::string& key) const {
    std::string v = get_string(key);
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (trim(v.substr(pos)).empty())
            return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(name_ + ": key '" + key + "' (entry " + std::to_string(line_of(key)) +
                      "): expected a number, got '" + v + "'");
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int KeyValueConfig::get_int(const std::string& key) const {
    double d = get_double(key);
    int i = static_cast<int>(d);
    if (static_cast<double>(i) != d)
        throw ConfigError(name_ + ": key '" + key + "': expected an integer");
    return i;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    if (!has(key))
        return fallback;
    std::string v = get_string(key);
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "yes" || v == "on" || v == "1")
        return true;
    if (v == "false" || v == "no" || v == "off" || v == "0")
        return false;
    throw ConfigError(name_ + ": key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> KeyValueConfig::get_all(const std::string& key) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].first == key) {
            used_[i] = true;
            out.push_back(entries_[i].second);
        }
    }
    return out;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
    std::istringstream in(get_string(key));
    std::vector<double> out;
    double v;
    while (in >> v)
        out.push_back(v);
    if (!in.eof())
        throw ConfigError(name_ + ": key '" + key + "': expected whitespace-separated numbers");
    return out;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (!used_[i])
            out.push_back(entries_[i].first);
    return out;
}

} // namespace rdlab
