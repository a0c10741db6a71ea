#pragma once

// End-to-end stages. Each stage reads its inputs from the work directory,
// computes everything in memory, and only then writes its outputs.

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcs/array2d.hpp"
#include "lcs/causal_states.hpp"
#include "lcs/config.hpp"
#include "lcs/dynamics.hpp"
#include "lcs/errors.hpp"
#include "lcs/io.hpp"
#include "lcs/lattice.hpp"
#include "lcs/metrics.hpp"
#include "lcs/render.hpp"

namespace lcs::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Workspace {
    fs::path dir;

    fs::path x_train() const { return dir / "X_train.lcsf"; }
    fs::path x_truth() const { return dir / "X_truth.lcsf"; }
    fs::path model() const { return dir / "model.lcsm"; }
    fs::path s_train() const { return dir / "S_train.lcsf"; }
    fs::path rule() const { return dir / "rule.lcsr"; }
    fs::path train_report() const { return dir / "train_report.json"; }
    fs::path x_bar() const { return dir / "X_bar.lcsf"; }
    fs::path x_bar_mask() const { return dir / "X_bar_mask.lcsf"; }
    fs::path s_tilde() const { return dir / "S_tilde.lcsf"; }
    fs::path x_tilde() const { return dir / "X_tilde.lcsf"; }
    fs::path forecast_report() const { return dir / "forecast_report.json"; }
    fs::path metrics() const { return dir / "metrics.json"; }
    fs::path png(const std::string& name) const { return dir / (name + ".png"); }
};

// Runs `body`, prefixing any library error with the stage name while keeping
// its type (and therefore its exit code).
template <typename F>
decltype(auto) stage(const std::string& name, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(name + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(name + ": " + e.what());
    } catch (const Error& e) {
        throw Error(name + ": " + e.what());
    } catch (const fs::filesystem_error& e) {
        throw IoError(name + ": " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& j) { io::write_file(path, j.dump(2) + "\n"); }

inline json read_json(const fs::path& path) {
    try {
        return json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline Array2D<std::int32_t> mask_to_lcsf(const Array2D<std::uint8_t>& m) {
    Array2D<std::int32_t> out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = m.data()[i];
    return out;
}

inline Array2D<std::uint8_t> mask_from_lcsf(const Array2D<std::int32_t>& m) {
    Array2D<std::uint8_t> out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = m.data()[i] != 0;
    return out;
}

// X_train (train_steps rows after the transient) and X_truth (truth_steps
// rows continuing from the last training row).
inline void simulate(const RunConfig& cfg, const Workspace& ws) {
    auto [train, truth] = stage("simulate", [&] {
        const auto lattice = cfg.lattice();
        SpacetimeField x = evolve(lattice, cfg.transient, cfg.train_steps);
        SpacetimeField y = continue_from(lattice, x.row(x.rows() - 1), cfg.truth_steps);
        return std::pair{std::move(x), std::move(y)};
    });
    stage("simulate/write", [&] {
        io::save_lcsf(ws.x_train(), train);
        io::save_lcsf(ws.x_truth(), truth);
    });
}

inline json train_report(const EpsilonModel& model, const FitResult& fit, const StateField& states,
                         const SCARule& rule) {
    const auto occ = metrics::occupancy(states.data(), model.n_states());
    double possible = 1.0;
    for (int i = 0; i < 2 * rule.radius + 1; ++i) possible *= static_cast<double>(model.n_states());
    json merges = json::array();
    for (const auto& m : model.psi.merges)
        merges.push_back({{"left", m.left}, {"right", m.right}, {"statistic", m.statistic}, {"critical", m.critical}, {"dof", m.dof}});
    return {
        {"n_states", model.n_states()},
        {"occupancy", occ},
        {"top4_coverage", metrics::top_k_coverage(occ, 4)},
        {"psi_mapping", model.psi.mapping},
        {"past_clusters", model.gamma_minus.k()},
        {"future_clusters", model.gamma_plus.k()},
        {"past_cluster_counts", model.gamma_minus.counts},
        {"future_cluster_counts", model.gamma_plus.counts},
        {"past_kmeans_iterations", fit.past_fit.iterations},
        {"future_kmeans_iterations", fit.future_fit.iterations},
        {"past_inertia", model.gamma_minus.inertia},
        {"future_inertia", model.gamma_plus.inertia},
        {"merges", merges},
        {"rule_entries", rule.table.size()},
        {"possible_neighborhoods", possible},
        {"unseen_neighborhoods", possible - static_cast<double>(rule.table.size())},
        {"rule_pairs_counted", rule.total_count()},
    };
}

inline void train(const RunConfig& cfg, const Workspace& ws) {
    const SpacetimeField x = stage("train/read", [&] { return io::load_lcsf<double>(ws.x_train()); });
    const auto shape = cfg.shape();
    const auto fit = stage("train/fit", [&] { return fit_detailed(x, shape, cfg.fit_options()); });
    const auto states = stage("train/encode", [&] { return encode(fit.model, x); });
    const auto rule = stage("train/estimate_phi", [&] { return estimate_phi(states, shape.c, fit.model.n_states()); });
    const auto report = train_report(fit.model, fit, states, rule);
    stage("train/write", [&] {
        io::save_model(ws.model(), fit.model);
        io::save_lcsf(ws.s_train(), states);
        io::save_rule(ws.rule(), rule);
        write_json(ws.train_report(), report);
    });
}

inline void reconstruct(const RunConfig& cfg, const Workspace& ws) {
    const auto model = stage("reconstruct/read", [&] { return io::load_model(ws.model()); });
    const auto states = stage("reconstruct/read", [&] { return io::load_lcsf<std::int32_t>(ws.s_train()); });
    const auto rec = stage("reconstruct/decode", [&] { return decode(model, states, cfg.decode_seed, cfg.decode_weighting); });
    stage("reconstruct/write", [&] {
        io::save_lcsf(ws.x_bar(), rec.values);
        io::save_lcsf(ws.x_bar_mask(), mask_to_lcsf(rec.covered));
    });
}

inline void run_forecast(const RunConfig& cfg, const Workspace& ws) {
    const auto model = stage("forecast/read", [&] { return io::load_model(ws.model()); });
    const auto rule = stage("forecast/read", [&] { return io::load_rule(ws.rule()); });
    const auto states = stage("forecast/read", [&] { return io::load_lcsf<std::int32_t>(ws.s_train()); });
    ForecastOptions opt{cfg.forecast_steps, cfg.forecast_seed, cfg.decode_seed, cfg.spatial_lambda, cfg.decode_weighting};
    const auto result = stage("forecast", [&] { return forecast(model, rule, states, opt); });
    std::vector<double> rates;
    for (std::size_t k = 0; k < result.latent.fallbacks.size(); ++k) rates.push_back(result.latent.fallback_rate(k));
    const json report{
        {"start_row", result.start_row},
        {"steps", cfg.forecast_steps},
        {"fallbacks_per_step", result.latent.fallbacks},
        {"fallback_rate_per_step", rates},
        {"fallback_rate", result.latent.overall_fallback_rate()},
    };
    stage("forecast/write", [&] {
        io::save_lcsf(ws.s_tilde(), result.latent.states);
        io::save_lcsf(ws.x_tilde(), result.observable.values);
        write_json(ws.forecast_report(), report);
    });
}

inline void render_all(const RunConfig& cfg, const Workspace& ws) {
    const auto model = stage("render/read", [&] { return io::load_model(ws.model()); });
    const auto x_train = stage("render/read", [&] { return io::load_lcsf<double>(ws.x_train()); });
    const auto x_truth = stage("render/read", [&] { return io::load_lcsf<double>(ws.x_truth()); });
    const auto s_train = stage("render/read", [&] { return io::load_lcsf<std::int32_t>(ws.s_train()); });
    const auto x_bar = stage("render/read", [&] { return io::load_lcsf<double>(ws.x_bar()); });
    const auto mask = stage("render/read", [&] { return mask_from_lcsf(io::load_lcsf<std::int32_t>(ws.x_bar_mask())); });
    const auto s_tilde = stage("render/read", [&] { return io::load_lcsf<std::int32_t>(ws.s_tilde()); });
    const auto x_tilde = stage("render/read", [&] { return io::load_lcsf<double>(ws.x_tilde()); });

    const std::size_t S = model.n_states();
    const auto images = stage("render", [&] {
        return std::array<std::pair<std::string, render::Image>, 6>{{
            {"X_train", render::gray_image(x_train)},
            {"S_train", render::state_image(s_train, S)},
            {"X_bar", render::gray_image(x_bar, 0, mask)},
            {"X_truth", render::gray_image(x_truth)},
            {"S_tilde", render::state_image(s_tilde, S)},
            {"X_tilde", render::gray_image(x_tilde)},
        }};
    });
    const std::size_t w = cfg.render_sites;
    const auto comp = render::composite(
        {render::gray_image(x_train, w), render::state_image(s_train, S, w), render::gray_image(x_bar, w, mask)},
        {render::gray_image(x_truth, w), render::state_image(s_tilde, S, w), render::gray_image(x_tilde, w)});
    stage("render/write", [&] {
        for (const auto& [name, img] : images) render::save_png(ws.png(name), img);
        render::save_png(ws.png("composite"), comp);
    });
}

inline json compute_metrics(const EpsilonModel& model, const SpacetimeField& x_train, const SpacetimeField& x_truth,
                            const StateField& s_train, const SpacetimeField& x_bar, const Array2D<std::uint8_t>& mask,
                            const StateField& s_tilde, const SpacetimeField& x_tilde, const json& forecast_report) {
    const std::size_t S = model.n_states();
    const auto occ = metrics::occupancy(s_train.data(), S);
    const auto ranked = metrics::states_by_occupancy(occ);
    const std::vector<std::int32_t> domain(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(4, S)));

    // Ground-truth latent field over training + truth time, indexed by absolute time.
    const SpacetimeField x_full = x_train.vstack(x_truth);
    const StateField s_full = encode(model, x_full);
    const std::size_t start = forecast_report.at("start_row").get<std::size_t>();

    std::vector<double> acc, baseline, obs_mae, domain_acc;
    std::vector<std::int32_t> pred_all, truth_all;
    for (std::size_t k = 0; k < s_tilde.rows(); ++k) {
        const std::size_t t = start + 1 + k;
        if (t >= s_full.rows()) break;
        const auto truth_row = s_full.row(t);
        if (std::all_of(truth_row.begin(), truth_row.end(), [](auto s) { return s == kMargin; })) break;
        acc.push_back(metrics::row_accuracy(s_tilde.row(k), truth_row));
        baseline.push_back(metrics::marginal_baseline(occ, metrics::occupancy(truth_row, S)));
        domain_acc.push_back(metrics::domain_accuracy(s_tilde.row(k), truth_row, domain));
        double e = 0.0;
        for (std::size_t r = 0; r < x_full.cols(); ++r) e += std::abs(x_tilde(k, r) - x_full(t, r));
        obs_mae.push_back(e / static_cast<double>(x_full.cols()));
        pred_all.insert(pred_all.end(), s_tilde.row(k).begin(), s_tilde.row(k).end());
        truth_all.insert(truth_all.end(), truth_row.begin(), truth_row.end());
    }
    json j{
        {"n_states", S},
        {"reconstruction_mae", metrics::mae(x_train, x_bar, mask)},
        {"occupancy", occ},
        {"top4_coverage", metrics::top_k_coverage(occ, 4)},
        {"fallback_rate_per_step", forecast_report.at("fallback_rate_per_step")},
        {"fallback_rate", forecast_report.at("fallback_rate")},
        {"forecast_start_row", start},
        {"latent_accuracy_by_lead", acc},
        {"marginal_baseline_by_lead", baseline},
        {"domain_accuracy_by_lead", domain_acc},
        {"observable_mae_by_lead", obs_mae},
        {"domain_states", domain},
        {"domain_persistence", metrics::domain_accuracy(pred_all, truth_all, domain)},
    };
    if (!acc.empty()) {
        j["lead1_accuracy"] = acc.front();
        j["lead1_baseline"] = baseline.front();
        j["lead1_beats_baseline"] = acc.front() > baseline.front();
    }
    return j;
}

inline void compute_and_write_metrics(const RunConfig&, const Workspace& ws) {
    const auto model = stage("metrics/read", [&] { return io::load_model(ws.model()); });
    const auto x_train = stage("metrics/read", [&] { return io::load_lcsf<double>(ws.x_train()); });
    const auto x_truth = stage("metrics/read", [&] { return io::load_lcsf<double>(ws.x_truth()); });
    const auto s_train = stage("metrics/read", [&] { return io::load_lcsf<std::int32_t>(ws.s_train()); });
    const auto x_bar = stage("metrics/read", [&] { return io::load_lcsf<double>(ws.x_bar()); });
    const auto mask = stage("metrics/read", [&] { return mask_from_lcsf(io::load_lcsf<std::int32_t>(ws.x_bar_mask())); });
    const auto s_tilde = stage("metrics/read", [&] { return io::load_lcsf<std::int32_t>(ws.s_tilde()); });
    const auto x_tilde = stage("metrics/read", [&] { return io::load_lcsf<double>(ws.x_tilde()); });
    const auto report = stage("metrics/read", [&] { return read_json(ws.forecast_report()); });
    const auto j = stage("metrics", [&] {
        return compute_metrics(model, x_train, x_truth, s_train, x_bar, mask, s_tilde, x_tilde, report);
    });
    stage("metrics/write", [&] { write_json(ws.metrics(), j); });
}

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"simulate", "train", "reconstruct", "forecast", "render", "metrics", "all"};
    return names;
}

inline void run_command(const std::string& command, const RunConfig& cfg, const Workspace& ws) {
    if (command == "simulate") simulate(cfg, ws);
    else if (command == "train") train(cfg, ws);
    else if (command == "reconstruct") reconstruct(cfg, ws);
    else if (command == "forecast") run_forecast(cfg, ws);
    else if (command == "render") render_all(cfg, ws);
    else if (command == "metrics") compute_and_write_metrics(cfg, ws);
    else if (command == "all") {
        for (const auto& c : command_names())
            if (c != "all") run_command(c, cfg, ws);
    } else {
        throw ConfigError("unknown command '" + command + "'");
    }
}

// Process exit code for an exception escaping a command.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const IoError*>(&e)) return 3;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
    return 4;
}

} // namespace lcs::pipeline
