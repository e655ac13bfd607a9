#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tps/errors.hpp"

namespace tps {

// Flat dotted-key configuration: `key = value` lines, # comments, later keys
// win. Every key is documented in docs/config.md.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    void apply_override(const std::string& key_eq_value);  // "key=value"
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;

    std::string get_str(const std::string& key, const std::string& fallback) const;
    std::string require_str(const std::string& key) const;
    int64_t get_int(const std::string& key, int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key,
                                  const std::vector<int>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace tps
