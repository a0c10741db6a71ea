#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "lcs/array2d.hpp"
#include "lcs/errors.hpp"

namespace lcs::metrics {

// Mean absolute error over points where mask != 0 (all points if mask is empty).
inline double mae(const SpacetimeField& a, const SpacetimeField& b, const Array2D<std::uint8_t>& mask = {}) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ConfigError("mae: shape mismatch");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!mask.empty() && mask.data()[i] == 0) continue;
        sum += std::abs(a.data()[i] - b.data()[i]);
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

// Fraction of sites in `row` where both labels are assigned and equal.
inline double row_accuracy(std::span<const std::int32_t> predicted, std::span<const std::int32_t> truth) {
    std::size_t hit = 0, n = 0;
    for (std::size_t r = 0; r < truth.size(); ++r) {
        if (predicted[r] == kMargin || truth[r] == kMargin) continue;
        ++n;
        hit += predicted[r] == truth[r];
    }
    return n == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(n);
}

inline double state_accuracy(const StateField& predicted, const StateField& truth) {
    if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
        throw ConfigError("state_accuracy: shape mismatch");
    return row_accuracy(predicted.data(), truth.data());
}

// Fraction of non-margin points carrying each state label.
inline std::vector<double> occupancy(std::span<const std::int32_t> labels, std::size_t n_states) {
    std::vector<double> occ(n_states, 0.0);
    std::size_t n = 0;
    for (auto s : labels) {
        if (s == kMargin) continue;
        if (s < 0 || static_cast<std::size_t>(s) >= n_states) throw ConfigError("occupancy: label out of range");
        occ[static_cast<std::size_t>(s)] += 1.0;
        ++n;
    }
    if (n > 0)
        for (auto& v : occ) v /= static_cast<double>(n);
    return occ;
}

// Combined occupancy of the `k` most frequent states.
inline double top_k_coverage(std::vector<double> occ, std::size_t k) {
    std::sort(occ.begin(), occ.end(), std::greater<>());
    return std::accumulate(occ.begin(), occ.begin() + static_cast<std::ptrdiff_t>(std::min(k, occ.size())), 0.0);
}

// Expected accuracy of labels drawn independently from `marginal` against
// targets distributed as `target`: sum_s marginal(s) target(s).
inline double marginal_baseline(std::span<const double> marginal, std::span<const double> target) {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(marginal.size(), target.size()); ++i) s += marginal[i] * target[i];
    return s;
}

// State ids ordered by descending occupancy, lowest id first on ties.
inline std::vector<std::int32_t> states_by_occupancy(std::span<const double> occ) {
    std::vector<std::int32_t> ids(occ.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(), [&](auto a, auto b) { return occ[static_cast<std::size_t>(a)] > occ[static_cast<std::size_t>(b)]; });
    return ids;
}

// Accuracy restricted to points whose true state is one of `domain_states`.
inline double domain_accuracy(std::span<const std::int32_t> predicted, std::span<const std::int32_t> truth,
                              std::span<const std::int32_t> domain_states) {
    std::size_t hit = 0, n = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == kMargin || predicted[i] == kMargin) continue;
        if (std::find(domain_states.begin(), domain_states.end(), truth[i]) == domain_states.end()) continue;
        ++n;
        hit += predicted[i] == truth[i];
    }
    return n == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(n);
}

} // namespace lcs::metrics
