#pragma once

// Plain-text configuration: one `section.key = value` per line, `#` starts a
// comment. Later assignments override earlier ones.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "oce/core/error.hpp"

namespace oce {

class KeyValueConfig {
  public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(const std::string &text, const std::string &origin = "<string>");
    static KeyValueConfig load(const std::filesystem::path &path);

    void set(const std::string &key, const std::string &value);
    bool has(const std::string &key) const;
    std::optional<std::string> raw(const std::string &key) const;

    std::string get_string(const std::string &key, const std::string &fallback) const;
    double get_double(const std::string &key, double fallback) const;
    std::int64_t get_int(const std::string &key, std::int64_t fallback) const;
    bool get_bool(const std::string &key, bool fallback) const;
    /// Comma separated list of numbers, e.g. "64,32".
    std::vector<double> get_list(const std::string &key, const std::vector<double> &fallback) const;

    /// Keys whose section prefix (text before the first '.') is in `sections`.
    std::vector<std::string> keys_in(const std::set<std::string> &sections) const;
    const std::map<std::string, std::string> &entries() const { return entries_; }

    /// Throws ConfigError naming the first key not present in `known`.
    void require_known(const std::set<std::string> &known) const;

  private:
    std::map<std::string, std::string> entries_;
};

} // namespace oce
