#pragma once

#include <charconv>
#include <map>
#include <string>
#include <string_view>

#include "sekq/errors.hpp"

namespace sekq {

/// Compact `name:key=value,key=value` form shared by distribution and policy specs.
struct SpecString {
    std::string name;
    std::map<std::string, std::string, std::less<>> args;

    static SpecString parse(std::string_view text) {
        SpecString out;
        auto colon = text.find(':');
        out.name = std::string(text.substr(0, colon));
        if (out.name.empty()) throw ConfigError("empty spec string");
        if (colon == std::string_view::npos) return out;
        std::string_view rest = text.substr(colon + 1);
        while (!rest.empty()) {
            auto comma = rest.find(',');
            std::string_view item = rest.substr(0, comma);
            auto eq = item.find('=');
            if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size())
                throw ConfigError("malformed argument '" + std::string(item) + "' in '" + std::string(text) + "'");
            auto [it, fresh] = out.args.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
            if (!fresh) throw ConfigError("duplicate argument '" + it->first + "' in '" + std::string(text) + "'");
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        return out;
    }

    bool has(std::string_view key) const { return args.find(key) != args.end(); }

    double number(std::string_view key) const {
        auto it = args.find(key);
        if (it == args.end()) throw ConfigError("'" + name + "' requires argument '" + std::string(key) + "'");
        const std::string& s = it->second;
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw ConfigError("argument '" + std::string(key) + "' is not a number: '" + s + "'");
        return value;
    }

    void expect_only(std::initializer_list<std::string_view> allowed) const {
        for (const auto& [key, value] : args) {
            bool ok = false;
            for (auto a : allowed) ok = ok || key == a;
            if (!ok) throw ConfigError("'" + name + "' does not take argument '" + key + "'");
        }
    }
};

/// Shortest round-trippable decimal form of a double.
inline std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace sekq
