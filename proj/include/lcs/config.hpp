#pragma once

// Flat `key = value` run configuration. `#` starts a comment; blank lines are
// ignored; unknown and repeated keys are errors reported with their line.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "lcs/causal_states.hpp"
#include "lcs/errors.hpp"
#include "lcs/lattice.hpp"
#include "lcs/lightcone.hpp"

namespace lcs {

struct RunConfig {
    // lattice
    double omega = 0.5;
    double kappa = 1.0;
    double alpha_coupling = 1.0;
    std::size_t size = 2000;
    std::uint64_t seed = 1;
    std::size_t transient = 300;
    std::size_t train_steps = 200;
    std::size_t truth_steps = 100;
    // lightcone
    int h_minus = 6;
    int h_plus = 1;
    int c = 1;
    double tau = 1.0;
    // clustering
    std::size_t k_past = 10;
    std::size_t k_future = 40;
    double chi2_alpha = 0.05;
    std::uint64_t kmeans_seed = 7;
    int max_iter = 300;
    double rel_tol = 1e-6;
    // dynamics and decoding
    std::size_t forecast_steps = 100;
    double spatial_lambda = 0.1;
    std::uint64_t forecast_seed = 11;
    std::uint64_t decode_seed = 13;
    DecodeWeighting decode_weighting = DecodeWeighting::exponential;
    // output
    std::size_t render_sites = 250; // composite panel width; 0 = all sites
    std::string work_dir = "work";

    LatticeConfig lattice() const { return {omega, kappa, alpha_coupling, size, seed}; }
    LightconeShape shape() const { return {h_minus, h_plus, c, tau}; }
    FitOptions fit_options() const { return {k_past, k_future, chi2_alpha, kmeans_seed, max_iter, rel_tol}; }

    void validate() const {
        lattice().validate();
        shape().validate();
        if (size < static_cast<std::size_t>(2 * c + 1)) throw ConfigError("size must be >= 2c+1");
        if (train_steps < 1) throw ConfigError("train_steps must be >= 1");
        if (truth_steps < 1) throw ConfigError("truth_steps must be >= 1");
        if (k_past < 1 || k_future < 1) throw ConfigError("k_past and k_future must be >= 1");
        if (!(chi2_alpha > 0.0 && chi2_alpha < 1.0)) throw ConfigError("chi2_alpha must lie in (0, 1)");
        if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
        if (!(rel_tol >= 0.0)) throw ConfigError("rel_tol must be >= 0");
        if (!(spatial_lambda >= 0.0 && spatial_lambda <= 1.0)) throw ConfigError("spatial_lambda must lie in [0, 1]");
    }

    void override_seeds(std::uint64_t s) {
        seed = s;
        kmeans_seed = s;
        forecast_seed = s;
        decode_seed = s;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view text) {
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ConfigError("invalid number '" + std::string(text) + "'");
    return v;
}

} // namespace detail

inline RunConfig parse_config(std::string_view text, const std::string& origin = "<config>") {
    RunConfig cfg;
    using Setter = std::function<void(std::string_view)>;
    auto num = [](auto& field) {
        return Setter([&field](std::string_view v) { field = detail::parse_number<std::remove_reference_t<decltype(field)>>(v); });
    };
    const std::map<std::string, Setter, std::less<>> setters{
        {"omega", num(cfg.omega)},
        {"kappa", num(cfg.kappa)},
        {"alpha_coupling", num(cfg.alpha_coupling)},
        {"size", num(cfg.size)},
        {"seed", num(cfg.seed)},
        {"transient", num(cfg.transient)},
        {"train_steps", num(cfg.train_steps)},
        {"truth_steps", num(cfg.truth_steps)},
        {"h_minus", num(cfg.h_minus)},
        {"h_plus", num(cfg.h_plus)},
        {"c", num(cfg.c)},
        {"tau", num(cfg.tau)},
        {"k_past", num(cfg.k_past)},
        {"k_future", num(cfg.k_future)},
        {"chi2_alpha", num(cfg.chi2_alpha)},
        {"kmeans_seed", num(cfg.kmeans_seed)},
        {"max_iter", num(cfg.max_iter)},
        {"rel_tol", num(cfg.rel_tol)},
        {"forecast_steps", num(cfg.forecast_steps)},
        {"spatial_lambda", num(cfg.spatial_lambda)},
        {"forecast_seed", num(cfg.forecast_seed)},
        {"decode_seed", num(cfg.decode_seed)},
        {"render_sites", num(cfg.render_sites)},
        {"decode_weighting",
         [&cfg](std::string_view v) {
             if (v == "exponential") cfg.decode_weighting = DecodeWeighting::exponential;
             else if (v == "sqrt_exponential") cfg.decode_weighting = DecodeWeighting::sqrt_exponential;
             else throw ConfigError("decode_weighting must be 'exponential' or 'sqrt_exponential'");
         }},
        {"work_dir", [&cfg](std::string_view v) { cfg.work_dir = std::string(v); }},
    };

    std::set<std::string, std::less<>> seen;
    std::istringstream in{std::string(text)};
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        std::string_view body = line;
        if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = detail::trim(body);
        if (body.empty()) continue;
        const auto where = origin + ":" + std::to_string(lineno) + ": ";
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
        const auto key = detail::trim(body.substr(0, eq));
        const auto value = detail::trim(body.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
        if (!seen.insert(std::string(key)).second) throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
        if (value.empty()) throw ConfigError(where + "missing value for '" + std::string(key) + "'");
        try {
            it->second(value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + std::string(key) + ": " + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

} // namespace lcs
