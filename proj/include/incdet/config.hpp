#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "incdet/errors.hpp"

namespace incdet::cli {

/// Minimal TOML-style config: [section] headers, key = value lines,
/// scalars (integer, float, bool, "string") and flat homogeneous arrays,
/// # comments. Keys are addressed as "section.key".
class Config {
public:
    using Scalar = std::variant<std::int64_t, double, bool, std::string>;
    struct Value {
        bool is_array = false;
        std::vector<Scalar> items; // single element when !is_array
        std::size_t line = 0;
    };

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open '" + path + "'");
        std::stringstream buffer;
        buffer << in.rdbuf();
        return parse_string(buffer.str(), path);
    }

    static Config parse_string(const std::string& text, const std::string& name = "config") {
        Config config;
        config.name_ = name;
        std::istringstream in(text);
        std::string raw;
        std::string section;
        std::size_t line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            std::string line = strip_comment(raw, name, line_no);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(at(name, line_no) + "unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty())
                    throw ConfigError(at(name, line_no) + "empty section name");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(at(name, line_no) + "expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string rhs = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError(at(name, line_no) + "empty key");
            if (rhs.empty()) throw ConfigError(at(name, line_no) + "missing value");
            const std::string full = section.empty() ? key : section + "." + key;
            if (config.values_.contains(full))
                throw ConfigError(at(name, line_no) + "duplicate key '" + full + "'");
            config.values_[full] = parse_value(rhs, name, line_no);
        }
        return config;
    }

    bool has(const std::string& key) const { return values_.contains(key); }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        const auto* v = find_scalar(key);
        if (!v) return fallback;
        if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
        throw ConfigError(where(key) + "expected an integer");
    }

    double get_double(const std::string& key, double fallback) const {
        const auto* v = find_scalar(key);
        if (!v) return fallback;
        return as_double(*v, key);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto* v = find_scalar(key);
        if (!v) return fallback;
        if (const auto* b = std::get_if<bool>(v)) return *b;
        throw ConfigError(where(key) + "expected a boolean");
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto* v = find_scalar(key);
        if (!v) return fallback;
        if (const auto* s = std::get_if<std::string>(v)) return *s;
        throw ConfigError(where(key) + "expected a string");
    }

    std::vector<double> get_double_list(const std::string& key,
                                        std::vector<double> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        for (const auto& s : it->second.items) out.push_back(as_double(s, key));
        return out;
    }

    std::vector<std::int64_t> get_int_list(const std::string& key,
                                           std::vector<std::int64_t> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<std::int64_t> out;
        for (const auto& s : it->second.items) {
            if (const auto* i = std::get_if<std::int64_t>(&s))
                out.push_back(*i);
            else
                throw ConfigError(where(key) + "expected integers");
        }
        return out;
    }

    std::vector<std::string> get_string_list(const std::string& key,
                                             std::vector<std::string> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<std::string> out;
        for (const auto& s : it->second.items) {
            if (const auto* str = std::get_if<std::string>(&s))
                out.push_back(*str);
            else
                throw ConfigError(where(key) + "expected strings");
        }
        return out;
    }

private:
    std::string name_;
    std::map<std::string, Value> values_;

    static std::string at(const std::string& name, std::size_t line) {
        return name + ":" + std::to_string(line) + ": ";
    }

    std::string where(const std::string& key) const {
        const auto it = values_.find(key);
        const std::size_t line = it == values_.end() ? 0 : it->second.line;
        return at(name_, line) + "key '" + key + "': ";
    }

    const Scalar* find_scalar(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return nullptr;
        if (it->second.is_array)
            throw ConfigError(where(key) + "expected a scalar, found an array");
        return &it->second.items.front();
    }

    static double as_double(const Scalar& s, const std::string& key) {
        if (const auto* d = std::get_if<double>(&s)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&s)) return static_cast<double>(*i);
        throw ConfigError("key '" + key + "': expected a number");
    }

    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static std::string strip_comment(const std::string& line, const std::string& name,
                                     std::size_t line_no) {
        std::string out;
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
            if (c == '#' && !in_string) return out;
            out.push_back(c);
        }
        if (in_string) throw ConfigError(at(name, line_no) + "unterminated string");
        return out;
    }

    static Scalar parse_scalar(const std::string& token, const std::string& name,
                               std::size_t line_no) {
        if (token == "true") return true;
        if (token == "false") return false;
        if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
            std::string s;
            for (std::size_t i = 1; i + 1 < token.size(); ++i) {
                if (token[i] == '\\' && i + 2 < token.size()) {
                    ++i;
                    switch (token[i]) {
                        case 'n': s.push_back('\n'); break;
                        case 't': s.push_back('\t'); break;
                        case '"': s.push_back('"'); break;
                        case '\\': s.push_back('\\'); break;
                        default:
                            throw ConfigError(at(name, line_no) + "bad escape '\\" +
                                              std::string(1, token[i]) + "'");
                    }
                } else {
                    s.push_back(token[i]);
                }
            }
            return s;
        }
        std::int64_t i = 0;
        {
            auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), i);
            if (ec == std::errc{} && p == token.data() + token.size()) return i;
        }
        double d = 0.0;
        {
            auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), d);
            if (ec == std::errc{} && p == token.data() + token.size()) return d;
        }
        throw ConfigError(at(name, line_no) + "cannot parse value '" + token + "'");
    }

    static Value parse_value(const std::string& rhs, const std::string& name,
                             std::size_t line_no) {
        Value value;
        value.line = line_no;
        if (rhs.front() == '[') {
            if (rhs.back() != ']')
                throw ConfigError(at(name, line_no) + "unterminated array");
            value.is_array = true;
            const std::string body = rhs.substr(1, rhs.size() - 2);
            std::string token;
            bool in_string = false;
            std::vector<std::string> tokens;
            for (char c : body) {
                if (c == '"') in_string = !in_string;
                if (c == ',' && !in_string) {
                    tokens.push_back(token);
                    token.clear();
                } else {
                    token.push_back(c);
                }
            }
            if (!trim(token).empty() || !tokens.empty()) tokens.push_back(token);
            for (auto& t : tokens) {
                t = trim(t);
                if (t.empty())
                    throw ConfigError(at(name, line_no) + "empty array element");
                value.items.push_back(parse_scalar(t, name, line_no));
            }
            // homogeneous up to int->float promotion
            int numbers = 0, strings = 0, booleans = 0;
            for (const auto& s : value.items) {
                if (std::holds_alternative<std::string>(s)) strings = 1;
                else if (std::holds_alternative<bool>(s)) booleans = 1;
                else numbers = 1;
            }
            if (numbers + strings + booleans > 1)
                throw ConfigError(at(name, line_no) + "mixed-type array");
        } else {
            value.items.push_back(parse_scalar(rhs, name, line_no));
        }
        return value;
    }
};

} // namespace incdet::cli
