#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "error.hpp"
#include "firefly.hpp"
#include "truss.hpp"

namespace trussfa {

inline constexpr const char* kToolVersion = "trussfa 1.0.0";

/// Effective run configuration. Thread count is deliberately not part of
/// it: results are identical at any thread count.
struct Config {
    std::string model = "builtin";
    int fa_n = 40;
    int fa_max_generation = 2500;
    double fa_alpha = 0.2;
    double fa_beta0 = 1.0;
    double fa_gamma = 1.0;
    double fa_delta = 0.97;
    double fa_m = 2.0;
    int max_bars = 2;
    int grid_step = 5;
    int n_modes = 8;
    std::uint64_t seed = 1;

    friend bool operator==(const Config&, const Config&) = default;
};

/// Firefly parameters of the config; dim and bounds are left for the caller.
inline FaParams fa_params(const Config& c)
{
    FaParams p;
    p.n = c.fa_n;
    p.max_generation = c.fa_max_generation;
    p.alpha0 = c.fa_alpha;
    p.beta0 = c.fa_beta0;
    p.gamma = c.fa_gamma;
    p.delta = c.fa_delta;
    p.m_exp = c.fa_m;
    p.seed = c.seed;
    return p;
}

inline void validate(const Config& c)
{
    validate(fa_params(c));
    if (c.max_bars < 1)
        throw ValidationError("config: max_bars must be at least 1");
    if (c.grid_step < 5 || c.grid_step > 95 || c.grid_step % 5 != 0)
        throw ValidationError("config: grid_step must be a multiple of 5 in [5, 95]");
    if (c.n_modes < 1)
        throw ValidationError("config: modes must be at least 1");
}

inline nlohmann::json config_to_json(const Config& c)
{
    return {{"model", c.model},
            {"fa", {{"n", c.fa_n},
                    {"max_generation", c.fa_max_generation},
                    {"alpha", c.fa_alpha},
                    {"beta0", c.fa_beta0},
                    {"gamma", c.fa_gamma},
                    {"delta", c.fa_delta},
                    {"m", c.fa_m}}},
            {"database", {{"max_bars", c.max_bars}, {"step", c.grid_step}, {"modes", c.n_modes}}},
            {"seed", c.seed}};
}

/// Overlay the keys present in `j` onto `base`; unknown keys are rejected.
inline Config merge_config(Config base, const nlohmann::json& j)
{
    auto reject_unknown = [](const nlohmann::json& obj, std::initializer_list<const char*> keys, const std::string& where) {
        if (!obj.is_object())
            throw ValidationError("config: '" + where + "' must be an object");
        for (const auto& [k, v] : obj.items()) {
            bool known = false;
            for (const char* key : keys)
                known = known || k == key;
            if (!known)
                throw ValidationError("config: unknown key '" + where + k + "'");
        }
    };
    try {
        reject_unknown(j, {"model", "fa", "database", "seed"}, "");
        if (j.contains("model"))
            base.model = j["model"].get<std::string>();
        if (j.contains("seed"))
            base.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("fa")) {
            const auto& fa = j["fa"];
            reject_unknown(fa, {"n", "max_generation", "alpha", "beta0", "gamma", "delta", "m"}, "fa.");
            base.fa_n = fa.value("n", base.fa_n);
            base.fa_max_generation = fa.value("max_generation", base.fa_max_generation);
            base.fa_alpha = fa.value("alpha", base.fa_alpha);
            base.fa_beta0 = fa.value("beta0", base.fa_beta0);
            base.fa_gamma = fa.value("gamma", base.fa_gamma);
            base.fa_delta = fa.value("delta", base.fa_delta);
            base.fa_m = fa.value("m", base.fa_m);
        }
        if (j.contains("database")) {
            const auto& db = j["database"];
            reject_unknown(db, {"max_bars", "step", "modes"}, "database.");
            base.max_bars = db.value("max_bars", base.max_bars);
            base.grid_step = db.value("step", base.grid_step);
            base.n_modes = db.value("modes", base.n_modes);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return base;
}

/// Line and column (1-based) of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

/// Defaults overlaid with the file, if any. The result is validated.
inline Config load_config(const std::optional<std::string>& path)
{
    Config c;
    if (path) {
        const std::string text = read_file(*path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            // nlohmann reports the offset one past the offending character.
            const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
            throw ParseError(*path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed config: " +
                                 e.what(),
                             e.byte);
        }
        c = merge_config(c, j);
    }
    validate(c);
    return c;
}

inline std::string config_hash(const Config& c) { return fnv1a_hex(config_to_json(c).dump()); }

/// Provenance lines embedded at the top of every output file.
inline std::vector<std::string> provenance_lines(const Config& c)
{
    return {std::string(kToolVersion) + " config_hash=" + config_hash(c) + " seed=" + std::to_string(c.seed),
            "config=" + config_to_json(c).dump()};
}

} // namespace trussfa
