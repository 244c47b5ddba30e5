#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "brl/error.hpp"

namespace brl {

/// Parsed form of `kind:key=value,key=value`.
struct Descriptor {
    std::string kind;
    std::map<std::string, std::string> params;

    bool has(const std::string& key) const { return params.count(key) != 0; }

    double number(const std::string& key, double fallback) const {
        auto it = params.find(key);
        if (it == params.end()) return fallback;
        return parse_number(key, it->second);
    }

    double number(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end()) throw UsageError("descriptor '" + kind + "' is missing parameter '" + key + "'");
        return parse_number(key, it->second);
    }

    int integer(const std::string& key, int fallback) const {
        double v = number(key, fallback);
        if (v != std::floor(v)) throw UsageError("parameter '" + key + "' must be an integer");
        return static_cast<int>(v);
    }

    /// Rejects parameters outside `allowed`.
    void expect_only(std::initializer_list<const char*> allowed) const {
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : params)
            if (!ok.count(k)) throw UsageError("unknown parameter '" + k + "' for '" + kind + "'");
    }

    static double parse_number(const std::string& key, const std::string& text) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != text.size() || text.empty() || !std::isfinite(v))
            throw UsageError("parameter '" + key + "' has non-numeric value '" + text + "'");
        return v;
    }
};

inline Descriptor parse_descriptor(std::string_view text) {
    Descriptor d;
    std::size_t pos = 0;
    auto ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    while (pos < text.size() && ident_char(text[pos])) d.kind.push_back(text[pos++]);
    if (d.kind.empty()) throw ParseError("expected a manifold or map kind", pos);
    if (pos == text.size()) return d;
    if (text[pos] != ':') throw ParseError(std::string("unexpected character '") + text[pos] + "'", pos);
    ++pos;
    while (true) {
        std::string key;
        while (pos < text.size() && ident_char(text[pos])) key.push_back(text[pos++]);
        if (key.empty()) throw ParseError("expected parameter name", pos);
        if (pos >= text.size() || text[pos] != '=') throw ParseError("expected '=' after '" + key + "'", pos);
        ++pos;
        std::string value;
        while (pos < text.size() && text[pos] != ',') value.push_back(text[pos++]);
        if (value.empty()) throw ParseError("empty value for '" + key + "'", pos);
        if (d.params.count(key)) throw ParseError("duplicate parameter '" + key + "'", pos);
        d.params.emplace(key, value);
        if (pos == text.size()) break;
        ++pos; // ','
    }
    return d;
}

/// Formats a double so that re-parsing yields the same bits.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace brl

namespace brl {

/// Shortest decimal form that round-trips; used inside descriptors.
inline std::string format_shortest(double v) {
    char buf[40];
    for (int digits = 1; digits <= 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

} // namespace brl
