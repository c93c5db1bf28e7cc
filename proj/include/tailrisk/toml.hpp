#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "tailrisk/errors.hpp"

namespace tailrisk {

/// Minimal TOML subset: [sections], bare keys, strings, integers, floats,
/// booleans and flat arrays, with # comments. Enough for run configs; anything
/// else is a parse error.
struct TomlValue {
    std::variant<std::string, std::int64_t, double, bool, std::vector<TomlValue>> v;

    bool is_string() const { return std::holds_alternative<std::string>(v); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
    bool is_number() const { return is_int() || std::holds_alternative<double>(v); }
    bool is_bool() const { return std::holds_alternative<bool>(v); }
    bool is_array() const { return std::holds_alternative<std::vector<TomlValue>>(v); }

    const std::string& as_string() const {
        if (!is_string()) throw parse_error("TOML value is not a string");
        return std::get<std::string>(v);
    }
    std::int64_t as_int() const {
        if (!is_int()) throw parse_error("TOML value is not an integer");
        return std::get<std::int64_t>(v);
    }
    double as_double() const {
        if (is_int()) return static_cast<double>(std::get<std::int64_t>(v));
        if (!std::holds_alternative<double>(v)) throw parse_error("TOML value is not a number");
        return std::get<double>(v);
    }
    bool as_bool() const {
        if (!is_bool()) throw parse_error("TOML value is not a boolean");
        return std::get<bool>(v);
    }
    const std::vector<TomlValue>& as_array() const {
        if (!is_array()) throw parse_error("TOML value is not an array");
        return std::get<std::vector<TomlValue>>(v);
    }
};

struct TomlDoc {
    std::map<std::string, std::map<std::string, TomlValue>> sections; // "" = root

    bool has(const std::string& section, const std::string& key) const {
        auto s = sections.find(section);
        return s != sections.end() && s->second.count(key) > 0;
    }
    const TomlValue& get(const std::string& section, const std::string& key) const {
        auto s = sections.find(section);
        if (s == sections.end() || !s->second.count(key))
            throw parse_error("missing config key [" + section + "] " + key);
        return s->second.at(key);
    }
};

namespace detail {
inline std::string toml_strip(const std::string& line) {
    std::string out;
    bool in_str = false;
    for (char c : line) {
        if (c == '"') in_str = !in_str;
        if (c == '#' && !in_str) break;
        out.push_back(c);
    }
    std::size_t a = out.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = out.find_last_not_of(" \t\r");
    return out.substr(a, b - a + 1);
}

inline bool toml_bare_key(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

inline TomlValue toml_scalar(const std::string& raw, int line_no);

inline TomlValue toml_value(const std::string& raw, int line_no) {
    if (!raw.empty() && raw.front() == '[') {
        if (raw.back() != ']')
            throw parse_error("line " + std::to_string(line_no) + ": unterminated array");
        std::vector<TomlValue> items;
        std::string body = raw.substr(1, raw.size() - 2);
        std::string cur;
        bool in_str = false;
        for (char c : body) {
            if (c == '"') in_str = !in_str;
            if (c == ',' && !in_str) {
                const std::string piece = toml_strip(cur);
                if (!piece.empty()) items.push_back(toml_scalar(piece, line_no));
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        const std::string piece = toml_strip(cur);
        if (!piece.empty()) items.push_back(toml_scalar(piece, line_no));
        return TomlValue{std::move(items)};
    }
    return toml_scalar(raw, line_no);
}

inline TomlValue toml_scalar(const std::string& raw, int line_no) {
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
        return TomlValue{raw.substr(1, raw.size() - 2)};
    if (raw == "true") return TomlValue{true};
    if (raw == "false") return TomlValue{false};
    // number: integer unless it carries a point or exponent
    const bool floaty = raw.find_first_of(".eE") != std::string::npos;
    std::istringstream is(raw);
    if (floaty) {
        double d;
        if (is >> d && is.eof()) return TomlValue{d};
    } else {
        std::int64_t i;
        if (is >> i && is.eof()) return TomlValue{i};
    }
    throw parse_error("line " + std::to_string(line_no) + ": cannot parse value '" + raw + "'");
}
} // namespace detail

inline TomlDoc parse_toml(std::istream& in, const std::string& name) {
    TomlDoc doc;
    std::string section;
    doc.sections[section];
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = detail::toml_strip(line);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.size() < 3 || s.back() != ']')
                throw parse_error(name + ":" + std::to_string(line_no) + ": bad section header");
            section = s.substr(1, s.size() - 2);
            if (!detail::toml_bare_key(section))
                throw parse_error(name + ":" + std::to_string(line_no) + ": bad section name '" +
                                  section + "'");
            doc.sections[section];
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw parse_error(name + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::toml_strip(s.substr(0, eq));
        const std::string val = detail::toml_strip(s.substr(eq + 1));
        if (!detail::toml_bare_key(key))
            throw parse_error(name + ":" + std::to_string(line_no) + ": bad key '" + key + "'");
        if (val.empty())
            throw parse_error(name + ":" + std::to_string(line_no) + ": empty value");
        if (doc.sections[section].count(key))
            throw parse_error(name + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                              "'");
        try {
            doc.sections[section][key] = detail::toml_value(val, line_no);
        } catch (const parse_error& e) {
            throw parse_error(name + ":" + std::string(e.what()));
        }
    }
    return doc;
}

inline TomlDoc parse_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open '" + path + "'");
    return parse_toml(in, path);
}

} // namespace tailrisk
