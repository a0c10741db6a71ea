#pragma once

// K-Means over lightcone vectors under the decay-weighted lightcone metric.
//
// Scaling every coordinate by sqrt(w_n) turns the weighted metric into the
// plain Euclidean one, so Lloyd's nearest-centroid and mean steps run
// unmodified on scaled data. Centroids are handed back in original units.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lcs/array2d.hpp"
#include "lcs/errors.hpp"
#include "lcs/lightcone.hpp"
#include "lcs/parallel.hpp"

namespace lcs {

struct KMeansOptions {
    std::size_t k = 10;
    std::uint64_t seed = 0;
    int max_iter = 300;
    double rel_tol = 1e-6;
};

struct ClusterModel {
    LightconeShape shape;
    ConeKind kind = ConeKind::past;
    Matrix centroids;                   // k x dim, original coordinates
    std::vector<std::uint64_t> counts;  // training members per cluster
    double inertia = 0.0;               // sum of squared lc distances to centroids

    std::size_t k() const { return centroids.rows(); }
    std::size_t dim() const { return centroids.cols(); }
};

struct KMeansResult {
    Matrix centroids;
    std::vector<std::int32_t> labels;
    std::vector<std::uint64_t> counts;
    std::vector<double> inertia_history; // one entry per assignment pass
    double inertia = 0.0;
    int iterations = 0;
};

namespace detail {

inline constexpr std::size_t kKMeansGrain = 4096;

inline double sq_euclid(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Nearest centroid, lowest index on ties.
inline std::pair<std::int32_t, double> nearest(const Matrix& centroids, std::span<const double> x) {
    std::int32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
        const double d = sq_euclid(x, centroids.row(j));
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::int32_t>(j);
        }
    }
    return {best, best_d};
}

// Deterministic sum of f(i) over [0, n): fixed chunks, reduced in order.
template <typename F>
double chunked_sum(std::size_t n, F&& f) {
    std::vector<double> partial(chunk_count(n, kKMeansGrain), 0.0);
    parallel_chunks(n, kKMeansGrain, [&](std::size_t c, std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += f(i);
        partial[c] = s;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

inline double unit_draw(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

// Greedy distance-weighted seeding: each new centroid is the best of several
// candidates drawn with probability proportional to squared distance. Stops
// early when every point coincides with a chosen centroid.
inline Matrix greedy_seed(const Matrix& data, std::size_t k, std::uint64_t seed) {
    const std::size_t n = data.rows(), dim = data.cols();
    std::mt19937_64 gen(seed);
    const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));

    std::vector<std::size_t> chosen{std::min(n - 1, static_cast<std::size_t>(unit_draw(gen) * static_cast<double>(n)))};
    std::vector<double> closest(n);
    parallel_for(n, [&](std::size_t i) { closest[i] = sq_euclid(data.row(i), data.row(chosen[0])); }, kKMeansGrain);
    double potential = chunked_sum(n, [&](std::size_t i) { return closest[i]; });

    std::vector<double> prefix(n);
    while (chosen.size() < k && potential > 0.0) {
        double run = 0.0;
        for (std::size_t i = 0; i < n; ++i) prefix[i] = (run += closest[i]);
        std::size_t best_idx = n;
        double best_pot = std::numeric_limits<double>::infinity();
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const double target = unit_draw(gen) * run;
            auto it = std::upper_bound(prefix.begin(), prefix.end(), target);
            if (it == prefix.end()) it = std::prev(it);
            std::size_t cand = static_cast<std::size_t>(it - prefix.begin());
            while (closest[cand] == 0.0 && cand > 0) --cand; // never pick a zero-weight point
            if (closest[cand] == 0.0) continue;
            const auto c = data.row(cand);
            const double pot = chunked_sum(n, [&](std::size_t i) {
                return std::min(closest[i], sq_euclid(data.row(i), c));
            });
            if (pot < best_pot) {
                best_pot = pot;
                best_idx = cand;
            }
        }
        if (best_idx == n) break;
        chosen.push_back(best_idx);
        const auto c = data.row(best_idx);
        parallel_for(n, [&](std::size_t i) { closest[i] = std::min(closest[i], sq_euclid(data.row(i), c)); }, kKMeansGrain);
        potential = chunked_sum(n, [&](std::size_t i) { return closest[i]; });
    }
    Matrix centroids(chosen.size(), dim);
    for (std::size_t j = 0; j < chosen.size(); ++j)
        std::copy_n(data.row(chosen[j]).begin(), dim, centroids.row(j).begin());
    return centroids;
}

inline void check_finite(const Matrix& data) {
    for (double v : data.data())
        if (!std::isfinite(v)) throw NumericalError("kmeans: non-finite input value");
}

} // namespace detail

// Plain Euclidean Lloyd iteration. Fewer than k clusters are returned only
// when the data holds fewer than k distinct points.
inline KMeansResult kmeans_euclidean(const Matrix& data, const KMeansOptions& opt) {
    const std::size_t n = data.rows(), dim = data.cols();
    if (opt.k < 1) throw ConfigError("kmeans: K must be >= 1");
    if (n < opt.k)
        throw ConfigError("kmeans: " + std::to_string(n) + " vectors is fewer than K=" + std::to_string(opt.k));
    if (opt.max_iter < 1) throw ConfigError("kmeans: max_iter must be >= 1");
    detail::check_finite(data);

    KMeansResult res;
    res.centroids = detail::greedy_seed(data, opt.k, opt.seed);
    res.labels.assign(n, 0);
    std::vector<double> dist(n);

    auto assign_all = [&] {
        const Matrix& c = res.centroids;
        parallel_for(n, [&](std::size_t i) {
            auto [j, d] = detail::nearest(c, data.row(i));
            res.labels[i] = j;
            dist[i] = d;
        }, detail::kKMeansGrain);
        res.counts.assign(c.rows(), 0);
        for (auto l : res.labels) ++res.counts[static_cast<std::size_t>(l)];
        return detail::chunked_sum(n, [&](std::size_t i) { return dist[i]; });
    };

    // Drops clusters with no members; remaining labels are renumbered.
    auto drop_empty = [&] {
        std::vector<std::int32_t> remap(res.centroids.rows(), -1);
        std::size_t kept = 0;
        for (std::size_t j = 0; j < res.centroids.rows(); ++j)
            if (res.counts[j] > 0) remap[j] = static_cast<std::int32_t>(kept++);
        if (kept == res.centroids.rows()) return;
        Matrix c(kept, dim);
        std::vector<std::uint64_t> counts(kept);
        for (std::size_t j = 0; j < res.centroids.rows(); ++j) {
            if (remap[j] < 0) continue;
            std::copy_n(res.centroids.row(j).begin(), dim, c.row(static_cast<std::size_t>(remap[j])).begin());
            counts[static_cast<std::size_t>(remap[j])] = res.counts[j];
        }
        for (auto& l : res.labels) l = remap[static_cast<std::size_t>(l)];
        res.centroids = std::move(c);
        res.counts = std::move(counts);
    };

    double inertia = assign_all();
    res.inertia_history.push_back(inertia);
    for (int iter = 1; iter <= opt.max_iter; ++iter) {
        // Re-seed empty clusters from the farthest point of a multi-member cluster.
        bool reseeded = false;
        for (std::size_t j = 0; j < res.centroids.rows(); ++j) {
            if (res.counts[j] > 0) continue;
            std::size_t far = n;
            double far_d = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (dist[i] > far_d && res.counts[static_cast<std::size_t>(res.labels[i])] > 1) {
                    far_d = dist[i];
                    far = i;
                }
            if (far == n) continue; // all points sit on centroids; dropped below
            --res.counts[static_cast<std::size_t>(res.labels[far])];
            res.labels[far] = static_cast<std::int32_t>(j);
            res.counts[j] = 1;
            inertia -= dist[far];
            dist[far] = 0.0;
            std::copy_n(data.row(far).begin(), dim, res.centroids.row(j).begin());
            reseeded = true;
        }
        drop_empty();

        // Mean step. Sums are taken relative to the previous centroid so a
        // cluster of identical points reproduces that point exactly.
        const std::size_t k = res.centroids.rows();
        const std::size_t chunks = chunk_count(n, detail::kKMeansGrain);
        std::vector<std::vector<double>> partial(chunks, std::vector<double>(k * dim, 0.0));
        parallel_chunks(n, detail::kKMeansGrain, [&](std::size_t ch, std::size_t b, std::size_t e) {
            auto& acc = partial[ch];
            for (std::size_t i = b; i < e; ++i) {
                const auto j = static_cast<std::size_t>(res.labels[i]);
                const auto x = data.row(i);
                const auto c = res.centroids.row(j);
                for (std::size_t d = 0; d < dim; ++d) acc[j * dim + d] += x[d] - c[d];
            }
        });
        std::vector<double> shift(k * dim, 0.0);
        for (const auto& p : partial)
            for (std::size_t q = 0; q < shift.size(); ++q) shift[q] += p[q];
        for (std::size_t j = 0; j < k; ++j) {
            const double inv = 1.0 / static_cast<double>(res.counts[j]);
            for (std::size_t d = 0; d < dim; ++d) res.centroids(j, d) += shift[j * dim + d] * inv;
        }

        const double prev = inertia;
        inertia = assign_all();
        res.inertia_history.push_back(inertia);
        res.iterations = iter;
        if (!reseeded && prev - inertia <= opt.rel_tol * prev) break;
    }
    drop_empty();
    res.inertia = inertia;
    return res;
}

inline std::vector<double> sqrt_weights(const LightconeShape& shape, ConeKind kind) {
    auto w = decay_weights(shape, kind);
    for (auto& v : w) v = std::sqrt(v);
    return w;
}

// Multiplies every row by sqrt(w) in place.
inline void scale_rows(Matrix& m, std::span<const double> sw) {
    if (m.cols() != sw.size()) throw ConfigError("kmeans: vector length does not match the lightcone shape");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        for (std::size_t d = 0; d < sw.size(); ++d) r[d] *= sw[d];
    }
}

struct WeightedKMeansResult {
    ClusterModel model;
    KMeansResult fit; // labels and history; centroids in scaled space
    Matrix scaled;    // the input vectors after sqrt(w) scaling
};

// K-Means under the lightcone metric. `vectors` is consumed (scaled in place).
inline WeightedKMeansResult kmeans(Matrix vectors, const LightconeShape& shape, ConeKind kind,
                                   const KMeansOptions& opt) {
    const auto sw = sqrt_weights(shape, kind);
    scale_rows(vectors, sw);
    WeightedKMeansResult out;
    out.fit = kmeans_euclidean(vectors, opt);
    out.model.shape = shape;
    out.model.kind = kind;
    out.model.centroids = out.fit.centroids;
    for (std::size_t j = 0; j < out.model.k(); ++j)
        for (std::size_t d = 0; d < sw.size(); ++d) out.model.centroids(j, d) /= sw[d];
    out.model.counts = out.fit.counts;
    out.model.inertia = out.fit.inertia;
    out.scaled = std::move(vectors);
    return out;
}

// Nearest-centroid lookup under the lightcone metric, built once per model.
class Assigner {
public:
    explicit Assigner(const ClusterModel& model)
        : sw_(sqrt_weights(model.shape, model.kind)), scaled_(model.centroids) {
        if (model.dim() != sw_.size())
            throw ConfigError("cluster model: centroid length does not match the lightcone shape");
        scale_rows(scaled_, sw_);
    }

    std::size_t dim() const { return sw_.size(); }

    // Scales `x` in place and returns its cluster (lowest id on ties).
    std::int32_t assign_in_place(std::span<double> x) const {
        for (std::size_t d = 0; d < x.size(); ++d) x[d] *= sw_[d];
        return detail::nearest(scaled_, x).first;
    }

    // `x` already carries the sqrt(w) scaling.
    std::int32_t assign_scaled(std::span<const double> x) const {
        return detail::nearest(scaled_, x).first;
    }

    std::int32_t operator()(std::span<const double> x) const {
        if (x.size() != dim())
            throw ConfigError("assign: vector length " + std::to_string(x.size()) + " != " + std::to_string(dim()));
        std::vector<double> tmp(x.begin(), x.end());
        return assign_in_place(tmp);
    }

private:
    std::vector<double> sw_;
    Matrix scaled_;
};

inline std::int32_t assign(const ClusterModel& model, std::span<const double> x) {
    return Assigner(model)(x);
}

} // namespace lcs
