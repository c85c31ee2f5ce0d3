#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdlab/errors.hpp"

namespace rdlab {

/// Flat key = value configuration file. '#' starts a comment, keys may repeat
/// (all occurrences retained in order). Parse errors carry line numbers.
class KeyValueConfig {
public:
    static KeyValueConfig from_file(const std::string& path);
    static KeyValueConfig from_string(const std::string& text, const std::string& name = "<string>");

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_all(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const; ///< whitespace separated

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    const std::string& name() const { return name_; }
    /// Keys that were never read by any getter; used to flag typos.
    std::vector<std::string> unused_keys() const;

private:
    std::string name_;
    std::vector<std::pair<std::string, std::string>> entries_;
    mutable std::vector<bool> used_;
    int line_of(const std::string& key) const;
};

} // namespace rdlab
