#pragma once

#include <map>
#include <string>
#include <vector>

namespace seeker::cfg {

/// Flat `key = value` configuration with '#' comments. Keys are dotted paths
/// (e.g. energy.capacity_uj); typed getters throw config_error on malformed
/// values or missing required keys.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<long long> get_int_list(const std::string& key,
                                        const std::vector<long long>& fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

} // namespace seeker::cfg
