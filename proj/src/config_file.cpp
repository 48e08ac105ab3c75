#include "groupcast/config_file.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace groupcast::cfg {

namespace {

std::string trim(const std::string& s) {
    size_t lo = 0, hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

bool valid_name(const std::string& name, bool allow_dots) {
    if (name.empty()) return false;
    for (const char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') continue;
        if (c == '.' && allow_dots) continue;
        return false;
    }
    return !(allow_dots && (name.front() == '.' || name.back() == '.'));
}

// Parses the value part of a line: a quoted string or a bare token, with an
// optional trailing comment.
std::string parse_value(const std::string& raw, const std::string& where) {
    const std::string text = trim(raw);
    if (text.empty()) throw ConfigError(where + ": missing value");
    if (text.front() == '"') {
        const size_t close = text.find('"', 1);
        if (close == std::string::npos) throw ConfigError(where + ": unterminated string");
        const std::string rest = trim(text.substr(close + 1));
        if (!rest.empty() && rest.front() != '#')
            throw ConfigError(where + ": trailing characters after string");
        return text.substr(1, close - 1);
    }
    const size_t hash = text.find('#');
    return trim(hash == std::string::npos ? text : text.substr(0, hash));
}

}  // namespace

Config parse_text(const std::string& text, const std::string& origin) {
    Config config;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = origin + ":" + std::to_string(line_no);
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;

        if (stripped.front() == '[') {
            if (stripped.back() != ']') throw ConfigError(where + ": unclosed section header");
            section = trim(stripped.substr(1, stripped.size() - 2));
            if (!valid_name(section, true))
                throw ConfigError(where + ": bad section name [" + section + "]");
            continue;
        }

        const size_t eq = stripped.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(stripped.substr(0, eq));
        if (!valid_name(key, false)) throw ConfigError(where + ": bad key name " + key);
        if (section.empty()) throw ConfigError(where + ": key " + key + " outside any section");

        const std::string full = section + "." + key;
        if (config.values.count(full)) throw ConfigError(where + ": duplicate key " + full);
        config.values[full] = parse_value(stripped.substr(eq + 1), where);
    }
    return config;
}

Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str(), path);
}

void apply_overrides(Config& config, const std::vector<std::string>& assignments) {
    for (const auto& assignment : assignments) {
        const size_t eq = assignment.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + assignment + "' is not of the form key=value");
        const std::string key = trim(assignment.substr(0, eq));
        if (!valid_name(key, true) || key.find('.') == std::string::npos)
            throw ConfigError("override key '" + key + "' is not a dotted config path");
        config.values[key] = parse_value(assignment.substr(eq + 1), "override " + key);
    }
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    touched.insert(key);
    const auto it = values.find(key);
    const std::string value = it == values.end() ? fallback : it->second;
    resolved[key] = value;
    return value;
}

std::string Config::require_string(const std::string& key) const {
    touched.insert(key);
    const auto it = values.find(key);
    if (it == values.end()) throw ConfigError(key + " is required");
    resolved[key] = it->second;
    return it->second;
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
    touched.insert(key);
    const auto it = values.find(key);
    if (it == values.end()) {
        resolved[key] = std::to_string(fallback);
        return fallback;
    }
    const std::string& text = it->second;
    int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError(key + ": expected an integer, got '" + text + "'");
    resolved[key] = text;
    return value;
}

double Config::get_double(const std::string& key, double fallback) const {
    touched.insert(key);
    const auto it = values.find(key);
    if (it == values.end()) {
        std::ostringstream fmt;
        fmt << fallback;
        resolved[key] = fmt.str();
        return fallback;
    }
    const std::string& text = it->second;
    try {
        size_t used = 0;
        const double value = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        resolved[key] = text;
        return value;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + text + "'");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    touched.insert(key);
    const auto it = values.find(key);
    if (it == values.end()) {
        resolved[key] = fallback ? "true" : "false";
        return fallback;
    }
    if (it->second == "true") {
        resolved[key] = "true";
        return true;
    }
    if (it->second == "false") {
        resolved[key] = "false";
        return false;
    }
    throw ConfigError(key + ": expected true or false, got '" + it->second + "'");
}

void Config::reject_unknown(const std::string& section) const {
    const std::string prefix = section + ".";
    for (const auto& [key, value] : values) {
        if (key.rfind(prefix, 0) != 0) continue;
        if (!touched.count(key)) throw ConfigError("unknown config key " + key);
    }
}

void write_snapshot(const Config& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    std::string current;
    for (const auto& [key, value] : config.resolved) {
        const size_t dot = key.rfind('.');
        const std::string section = key.substr(0, dot);
        const std::string name = key.substr(dot + 1);
        if (section != current) {
            if (!current.empty()) out << '\n';
            out << '[' << section << "]\n";
            current = section;
        }
        const bool bare = value == "true" || value == "false" ||
                          (!value.empty() &&
                           value.find_first_not_of("0123456789+-.eE") == std::string::npos);
        if (bare)
            out << name << " = " << value << '\n';
        else
            out << name << " = \"" << value << "\"\n";
    }
}

}  // namespace groupcast::cfg
