#pragma once

#include "groupcast/common.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace groupcast::cfg {

// A parsed key/value config file. The format is a small TOML subset:
// [dotted.section] headers, `key = value` lines, # comments, quoted or bare
// values. Every key lives in a section and is addressed by its dotted path.
//
// Getters record both which keys were consumed and the value each resolved
// to (fallback included), so a command can reject unknown keys in its own
// section and write an exact snapshot of the configuration it ran with.
struct Config {
    std::map<std::string, std::string> values;
    mutable std::set<std::string> touched;
    mutable std::map<std::string, std::string> resolved;

    bool has(const std::string& key) const { return values.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    int64_t get_int(const std::string& key, int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    // Like get_string but the key must be present.
    std::string require_string(const std::string& key) const;

    // Throws ConfigError if any key under "<section>." was never consumed
    // by a getter.
    void reject_unknown(const std::string& section) const;
};

Config parse_text(const std::string& text, const std::string& origin);
Config parse_file(const std::string& path);

// Each assignment is "dotted.key=value"; values may be quoted. Overrides
// replace file values or add new keys.
void apply_overrides(Config& config, const std::vector<std::string>& assignments);

// Writes the resolved keys as a loadable config file.
void write_snapshot(const Config& config, const std::string& path);

}  // namespace groupcast::cfg
