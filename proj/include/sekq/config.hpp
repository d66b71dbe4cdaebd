#pragma once

#include <charconv>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sekq/errors.hpp"
#include "sekq/experiments.hpp"

namespace sekq {

namespace detail {

template <class T>
std::vector<T> json_list(const nlohmann::json& j) {
    if (j.is_array()) return j.get<std::vector<T>>();
    return {j.get<T>()};
}

}  // namespace detail

/// Applies a JSON object onto cfg. Scalars are accepted where lists are expected.
inline void apply_json(ExperimentConfig& cfg, const nlohmann::json& j) {
    static const std::set<std::string> known{
        "experiment", "policies", "dist", "k", "rho", "eps", "n", "sigma", "num_arrivals", "seeds",
        "out", "assert_level", "threads", "csq", "rho_high", "regime", "x", "eps_prime", "y", "max_jobs", "sizes"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    try {
        if (j.contains("experiment")) cfg.kind = parse_experiment_kind(j["experiment"].get<std::string>());
        if (j.contains("policies")) cfg.policies = detail::json_list<std::string>(j["policies"]);
        if (j.contains("dist")) cfg.dist = j["dist"].get<std::string>();
        if (j.contains("k")) cfg.k = detail::json_list<int>(j["k"]);
        if (j.contains("rho")) cfg.rho = detail::json_list<double>(j["rho"]);
        if (j.contains("eps")) cfg.eps = detail::json_list<double>(j["eps"]);
        if (j.contains("n")) cfg.n = detail::json_list<int>(j["n"]);
        if (j.contains("sigma")) cfg.sigma = detail::json_list<double>(j["sigma"]);
        if (j.contains("num_arrivals")) cfg.num_arrivals = j["num_arrivals"].get<std::uint64_t>();
        if (j.contains("seeds")) cfg.seeds = detail::json_list<std::uint64_t>(j["seeds"]);
        if (j.contains("out")) cfg.out = j["out"].get<std::string>();
        if (j.contains("assert_level")) cfg.assert_level = parse_assert_level(j["assert_level"].get<std::string>());
        if (j.contains("threads")) cfg.threads = j["threads"].get<unsigned>();
        if (j.contains("csq")) cfg.csq = detail::json_list<double>(j["csq"]);
        if (j.contains("rho_high")) cfg.rho_high = detail::json_list<double>(j["rho_high"]);
        if (j.contains("regime")) cfg.regime = j["regime"].get<std::string>();
        if (j.contains("x")) cfg.x = j["x"].get<double>();
        if (j.contains("eps_prime")) cfg.eps_prime = j["eps_prime"].get<double>();
        if (j.contains("y")) cfg.y = j["y"].get<double>();
        if (j.contains("max_jobs")) cfg.max_jobs = j["max_jobs"].get<std::size_t>();
        if (j.contains("sizes")) cfg.sizes = detail::json_list<double>(j["sizes"]);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig cfg = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    apply_json(cfg, j);
    return cfg;
}

/// Seed lists: "1,2,7" or ranges "1..5", mixable ("1..3,9").
inline std::vector<std::uint64_t> parse_seeds(std::string_view text) {
    std::vector<std::uint64_t> out;
    auto number = [&](std::string_view s) {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("bad seed '" + std::string(s) + "'");
        return v;
    };
    while (!text.empty()) {
        auto comma = text.find(',');
        auto item = text.substr(0, comma);
        auto dots = item.find("..");
        if (dots == std::string_view::npos) out.push_back(number(item));
        else {
            auto lo = number(item.substr(0, dots)), hi = number(item.substr(dots + 2));
            if (hi < lo) throw ConfigError("empty seed range '" + std::string(item) + "'");
            for (auto s = lo; s <= hi; ++s) out.push_back(s);
        }
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    }
    if (out.empty()) throw ConfigError("seed list is empty");
    return out;
}

}  // namespace sekq
