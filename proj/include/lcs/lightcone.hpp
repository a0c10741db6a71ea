#pragma once

// Lightcone templates on a 1+1D periodic field.
//
// The past cone of (r, t) holds the present point (depth 0) and, for each
// depth d = 1..h_minus, the 2cd+1 sites r-cd..r+cd at time t-d. The future
// cone holds depths d = 1..h_plus at times t+d and excludes the present.
// Flattening is depth-major ascending, left to right within a depth.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lcs/array2d.hpp"
#include "lcs/errors.hpp"
#include "lcs/parallel.hpp"

namespace lcs {

enum class ConeKind { past, future };

struct LightconeShape {
    int h_minus = 6;
    int h_plus = 1;
    int c = 1;
    double tau = 1.0;

    void validate() const {
        if (h_minus < 1) throw ConfigError("lightcone: h_minus must be >= 1");
        if (h_plus < 1) throw ConfigError("lightcone: h_plus must be >= 1");
        if (c < 1) throw ConfigError("lightcone: c must be >= 1");
        if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("lightcone: tau must be finite and >= 0");
    }

    // (h- + 1)(c h- + 1)
    std::size_t past_size() const {
        return static_cast<std::size_t>(h_minus + 1) * static_cast<std::size_t>(c * h_minus + 1);
    }
    // sum over d = 1..h+ of (2cd + 1)
    std::size_t future_size() const {
        return static_cast<std::size_t>(h_plus) * static_cast<std::size_t>(c * (h_plus + 1) + 1);
    }
    std::size_t size(ConeKind kind) const {
        return kind == ConeKind::past ? past_size() : future_size();
    }

    friend bool operator==(const LightconeShape&, const LightconeShape&) = default;
};

// Position of one flattened coordinate relative to the cone apex.
struct ConeCoordinate {
    int depth;  // temporal distance from the apex, >= 0
    int offset; // spatial offset, in [-c*depth, c*depth]
};

inline std::vector<ConeCoordinate> cone_coordinates(const LightconeShape& shape, ConeKind kind) {
    std::vector<ConeCoordinate> coords;
    coords.reserve(shape.size(kind));
    const int first = kind == ConeKind::past ? 0 : 1;
    const int last = kind == ConeKind::past ? shape.h_minus : shape.h_plus;
    for (int d = first; d <= last; ++d)
        for (int dx = -shape.c * d; dx <= shape.c * d; ++dx) coords.push_back({d, dx});
    return coords;
}

// w_n = exp(-tau d(n)) for each flattened coordinate.
inline std::vector<double> decay_weights(const LightconeShape& shape, ConeKind kind) {
    std::vector<double> w;
    for (const auto& co : cone_coordinates(shape, kind)) w.push_back(std::exp(-shape.tau * co.depth));
    return w;
}

struct LightconeVector {
    ConeKind kind;
    std::vector<double> values;
};

namespace detail {
// Copies the cone at (r, t) into `out`; the caller has checked the margins.
inline void fill_cone(const SpacetimeField& field, std::size_t r, std::size_t t,
                      std::span<const ConeCoordinate> coords, ConeKind kind, std::span<double> out) {
    const auto n = field.cols();
    const auto sign = kind == ConeKind::past ? -1 : 1;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const auto tt = static_cast<std::ptrdiff_t>(t) + sign * coords[i].depth;
        out[i] = field(static_cast<std::size_t>(tt),
                       wrap(static_cast<std::ptrdiff_t>(r) + coords[i].offset, n));
    }
}

inline void check_site(const SpacetimeField& field, std::size_t r, const LightconeShape& shape) {
    if (r >= field.cols()) throw ConfigError("lightcone: site index out of range");
    if (field.cols() < static_cast<std::size_t>(2 * shape.c + 1))
        throw ConfigError("lightcone: field narrower than 2c+1 sites");
}
} // namespace detail

inline LightconeVector past_lightcone(const SpacetimeField& field, std::size_t r, std::size_t t,
                                      const LightconeShape& shape) {
    detail::check_site(field, r, shape);
    if (t < static_cast<std::size_t>(shape.h_minus) || t >= field.rows())
        throw MarginError("past lightcone at t=" + std::to_string(t) + " needs h_minus=" +
                          std::to_string(shape.h_minus) + " prior rows");
    const auto coords = cone_coordinates(shape, ConeKind::past);
    LightconeVector v{ConeKind::past, std::vector<double>(coords.size())};
    detail::fill_cone(field, r, t, coords, ConeKind::past, v.values);
    return v;
}

inline LightconeVector future_lightcone(const SpacetimeField& field, std::size_t r, std::size_t t,
                                        const LightconeShape& shape) {
    detail::check_site(field, r, shape);
    if (t + static_cast<std::size_t>(shape.h_plus) >= field.rows())
        throw MarginError("future lightcone at t=" + std::to_string(t) + " needs h_plus=" +
                          std::to_string(shape.h_plus) + " later rows");
    const auto coords = cone_coordinates(shape, ConeKind::future);
    LightconeVector v{ConeKind::future, std::vector<double>(coords.size())};
    detail::fill_cone(field, r, t, coords, ConeKind::future, v.values);
    return v;
}

// Paired past/future vectors for every non-margin point.
// Matrix row i corresponds to t = first_row + i / sites, r = i % sites.
struct LightconeSet {
    Matrix past;
    Matrix future;
    std::size_t first_row = 0; // first non-margin time row
    std::size_t last_row = 0;  // last non-margin time row (inclusive)
    std::size_t sites = 0;
    std::vector<bool> margin_rows; // per time row of the source field

    std::size_t index(std::size_t r, std::size_t t) const { return (t - first_row) * sites + r; }
};

inline LightconeSet extract_all(const SpacetimeField& field, const LightconeShape& shape) {
    shape.validate();
    const std::size_t T = field.rows(), N = field.cols();
    const auto hm = static_cast<std::size_t>(shape.h_minus), hp = static_cast<std::size_t>(shape.h_plus);
    if (T < hm + hp + 1)
        throw ConfigError("extract_all: field has " + std::to_string(T) + " rows, needs at least " +
                          std::to_string(hm + hp + 1));
    if (N < static_cast<std::size_t>(2 * shape.c + 1))
        throw ConfigError("extract_all: field narrower than 2c+1 sites");

    LightconeSet set;
    set.first_row = hm;
    set.last_row = T - 1 - hp;
    set.sites = N;
    set.margin_rows.assign(T, true);
    for (std::size_t t = set.first_row; t <= set.last_row; ++t) set.margin_rows[t] = false;

    const std::size_t points = (set.last_row - set.first_row + 1) * N;
    const auto past_coords = cone_coordinates(shape, ConeKind::past);
    const auto future_coords = cone_coordinates(shape, ConeKind::future);
    set.past = Matrix(points, past_coords.size());
    set.future = Matrix(points, future_coords.size());
    parallel_for(points, [&](std::size_t i) {
        const std::size_t t = set.first_row + i / N, r = i % N;
        detail::fill_cone(field, r, t, past_coords, ConeKind::past, set.past.row(i));
        detail::fill_cone(field, r, t, future_coords, ConeKind::future, set.future.row(i));
    }, 2048);
    return set;
}

// sum_n w_n (a_n - b_n)^2
inline double weighted_sq_distance(std::span<const double> a, std::span<const double> b,
                                   std::span<const double> w) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += w[i] * d * d;
    }
    return s;
}

inline double lc_distance(std::span<const double> a, std::span<const double> b,
                          std::span<const double> weights) {
    if (a.size() != b.size() || a.size() != weights.size())
        throw ConfigError("lc_distance: vector lengths differ (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
    return std::sqrt(weighted_sq_distance(a, b, weights));
}

inline double lc_distance(const LightconeVector& a, const LightconeVector& b,
                          const LightconeShape& shape) {
    if (a.kind != b.kind) throw ConfigError("lc_distance: mixing past and future vectors");
    if (a.values.size() != shape.size(a.kind))
        throw ConfigError("lc_distance: vector length does not match the lightcone shape");
    return lc_distance(a.values, b.values, decay_weights(shape, a.kind));
}

} // namespace lcs
