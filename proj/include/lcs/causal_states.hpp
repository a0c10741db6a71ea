#pragma once

// Local causal states as a spacetime autoencoder.
//
// Encoder: epsilon(past cone) ~= psi(gamma_minus(past cone)).
// Decoder: every non-margin point samples a future cluster from its state's
// predictive distribution and places that cluster's centroid with its base at
// the point; overlapping placements are averaged with weight exp(-tau d).

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lcs/agglomerate.hpp"
#include "lcs/array2d.hpp"
#include "lcs/errors.hpp"
#include "lcs/kmeans.hpp"
#include "lcs/lightcone.hpp"
#include "lcs/parallel.hpp"
#include "lcs/random.hpp"

namespace lcs {

struct EpsilonModel {
    LightconeShape shape;
    ClusterModel gamma_minus;
    ClusterModel gamma_plus;
    PsiMap psi;

    std::size_t n_states() const { return psi.n_states(); }

    void validate() const {
        shape.validate();
        if (gamma_minus.kind != ConeKind::past || gamma_plus.kind != ConeKind::future)
            throw ConfigError("epsilon model: cluster model kinds are swapped");
        if (gamma_minus.dim() != shape.past_size() || gamma_plus.dim() != shape.future_size())
            throw ConfigError("epsilon model: centroid lengths do not match the lightcone shape");
        if (psi.mapping.size() != gamma_minus.k())
            throw ConfigError("epsilon model: psi map does not cover every past cluster");
        if (psi.state_pmfs.cols() != gamma_plus.k())
            throw ConfigError("epsilon model: state PMFs are not over the future clusters");
        for (auto s : psi.mapping)
            if (s < 0 || static_cast<std::size_t>(s) >= n_states())
                throw ConfigError("epsilon model: psi maps to an unknown state");
    }
};

struct FitOptions {
    std::size_t k_past = 10;
    std::size_t k_future = 40;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    int max_iter = 300;
    double rel_tol = 1e-6;
};

// Model plus the intermediate products of fitting.
struct FitResult {
    EpsilonModel model;
    std::vector<std::int32_t> past_labels;   // per non-margin point, extract_all order
    std::vector<std::int32_t> future_labels;
    ContingencyTable table;
    KMeansResult past_fit;                   // inertia history etc.
    KMeansResult future_fit;
};

inline FitResult fit_detailed(const SpacetimeField& field, const LightconeShape& shape,
                              const FitOptions& opt) {
    LightconeSet set = extract_all(field, shape);
    const std::size_t points = set.past.rows();

    auto label_all = [points](const ClusterModel& m, const Matrix& scaled) {
        const Assigner assigner(m);
        std::vector<std::int32_t> labels(points);
        parallel_for(points, [&](std::size_t i) { labels[i] = assigner.assign_scaled(scaled.row(i)); }, 4096);
        return labels;
    };

    FitResult out;
    out.model.shape = shape;
    {
        auto past = kmeans(std::move(set.past), shape, ConeKind::past,
                           {opt.k_past, opt.seed, opt.max_iter, opt.rel_tol});
        out.model.gamma_minus = std::move(past.model);
        out.past_labels = label_all(out.model.gamma_minus, past.scaled);
        out.past_fit = std::move(past.fit);
    }
    {
        auto future = kmeans(std::move(set.future), shape, ConeKind::future,
                             {opt.k_future, opt.seed + 1, opt.max_iter, opt.rel_tol});
        out.model.gamma_plus = std::move(future.model);
        out.future_labels = label_all(out.model.gamma_plus, future.scaled);
        out.future_fit = std::move(future.fit);
    }
    out.table = build_contingency(out.past_labels, out.future_labels, out.model.gamma_minus.k(),
                                  out.model.gamma_plus.k());
    out.model.psi = agglomerate(out.table, opt.alpha);
    return out;
}

inline EpsilonModel fit(const SpacetimeField& field, const LightconeShape& shape, const FitOptions& opt) {
    return fit_detailed(field, shape, opt).model;
}

enum class EncodeMode {
    both_margins,     // rows without a full past or future cone are margin
    past_margin_only, // only rows without a full past cone are margin
};

inline StateField encode(const EpsilonModel& model, const SpacetimeField& field,
                         EncodeMode mode = EncodeMode::both_margins) {
    const auto& shape = model.shape;
    const auto hm = static_cast<std::size_t>(shape.h_minus), hp = static_cast<std::size_t>(shape.h_plus);
    const std::size_t T = field.rows(), N = field.cols();
    const std::size_t need = mode == EncodeMode::both_margins ? hm + hp + 1 : hm + 1;
    if (T < need) throw ConfigError("encode: field has " + std::to_string(T) + " rows, needs " + std::to_string(need));
    if (N < static_cast<std::size_t>(2 * shape.c + 1)) throw ConfigError("encode: field narrower than 2c+1 sites");

    const std::size_t last = mode == EncodeMode::both_margins ? T - 1 - hp : T - 1;
    const Assigner assigner(model.gamma_minus);
    const auto coords = cone_coordinates(shape, ConeKind::past);
    StateField states(T, N, kMargin);
    const std::size_t points = (last - hm + 1) * N;
    parallel_chunks(points, 2048, [&](std::size_t, std::size_t b, std::size_t e) {
        std::vector<double> buf(coords.size());
        for (std::size_t i = b; i < e; ++i) {
            const std::size_t t = hm + i / N, r = i % N;
            detail::fill_cone(field, r, t, coords, ConeKind::past, buf);
            const auto cluster = assigner.assign_in_place(buf);
            states(t, r) = model.psi.mapping[static_cast<std::size_t>(cluster)];
        }
    });
    return states;
}

enum class DecodeWeighting {
    exponential,      // exp(-tau d)
    sqrt_exponential, // exp(-tau d / 2), the square root of the metric weight
};

struct Reconstruction {
    SpacetimeField values;          // 0 where not covered
    Array2D<std::uint8_t> covered;  // 1 where at least one placement landed
    SpacetimeField weight_sums;     // total placement weight per point
};

// Cumulative distribution per state, for inverse-CDF sampling.
inline Matrix state_cdfs(const PsiMap& psi) {
    Matrix cdf(psi.state_pmfs.rows(), psi.state_pmfs.cols());
    for (std::size_t s = 0; s < cdf.rows(); ++s) {
        double run = 0.0;
        for (std::size_t j = 0; j < cdf.cols(); ++j) cdf(s, j) = (run += psi.state_pmfs(s, j));
    }
    return cdf;
}

// Future cluster drawn for the source point (t, r) in state `state`.
inline std::int32_t sample_future_cluster(const Matrix& cdfs, std::int32_t state, std::uint64_t seed,
                                          std::size_t t, std::size_t r) {
    const double u = rng::uniform(seed, rng::Stream::decode, t, r);
    return static_cast<std::int32_t>(rng::sample_cdf(cdfs.row(static_cast<std::size_t>(state)), u));
}

inline double placement_weight(const LightconeShape& shape, int depth, DecodeWeighting weighting) {
    const double rate = weighting == DecodeWeighting::exponential ? shape.tau : 0.5 * shape.tau;
    return std::exp(-rate * depth);
}

inline Reconstruction decode(const EpsilonModel& model, const StateField& states, std::uint64_t seed,
                             DecodeWeighting weighting = DecodeWeighting::exponential) {
    const std::size_t T = states.rows(), N = states.cols(), S = model.n_states();
    bool any = false;
    for (auto s : states.data()) {
        if (s == kMargin) continue;
        if (s < 0 || static_cast<std::size_t>(s) >= S)
            throw ConfigError("decode: state label " + std::to_string(s) + " outside [0, " + std::to_string(S) + ")");
        any = true;
    }
    if (!any) throw ConfigError("decode: state field has no non-margin points");

    // One future-cluster draw per source point, shared by all its placements.
    const Matrix cdfs = state_cdfs(model.psi);
    StateField drawn(T, N, kMargin);
    parallel_for(T * N, [&](std::size_t i) {
        const std::size_t t = i / N, r = i % N;
        if (const auto s = states(t, r); s != kMargin) drawn(t, r) = sample_future_cluster(cdfs, s, seed, t, r);
    }, 4096);

    const auto coords = cone_coordinates(model.shape, ConeKind::future);
    std::vector<double> weights(coords.size());
    for (std::size_t n = 0; n < coords.size(); ++n) weights[n] = placement_weight(model.shape, coords[n].depth, weighting);

    // Gather per target so every sum has a fixed order. The mean is formed
    // relative to the first contribution so identical values average exactly.
    Reconstruction out{SpacetimeField(T, N, 0.0), Array2D<std::uint8_t>(T, N, 0), SpacetimeField(T, N, 0.0)};
    const Matrix& centroids = model.gamma_plus.centroids;
    parallel_for(T * N, [&](std::size_t i) {
        const std::size_t t = i / N, r = i % N;
        double ref = 0.0, wsum = 0.0, acc = 0.0;
        bool first = true;
        for (std::size_t n = 0; n < coords.size(); ++n) {
            const auto d = static_cast<std::size_t>(coords[n].depth);
            if (d > t) continue;
            const std::size_t src_r = wrap(static_cast<std::ptrdiff_t>(r) - coords[n].offset, N);
            const auto cluster = drawn(t - d, src_r);
            if (cluster == kMargin) continue;
            const double y = centroids(static_cast<std::size_t>(cluster), n);
            if (first) {
                ref = y;
                first = false;
            }
            wsum += weights[n];
            acc += weights[n] * (y - ref);
        }
        if (first) return;
        double v = ref + acc / wsum;
        if (v < 0.0) v = 0.0;
        if (v >= 1.0) v = std::nextafter(1.0, 0.0);
        out.values(t, r) = v;
        out.covered(t, r) = 1;
        out.weight_sums(t, r) = wsum;
    }, 2048);
    return out;
}

} // namespace lcs
