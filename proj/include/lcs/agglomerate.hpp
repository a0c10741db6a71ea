#pragma once

// Joint past/future cluster counts and the merging of past clusters whose
// predictive distributions are statistically indistinguishable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lcs/array2d.hpp"
#include "lcs/chi_square.hpp"
#include "lcs/errors.hpp"

namespace lcs {

// counts(i, j) = number of points with past cluster i and future cluster j.
struct ContingencyTable {
    Array2D<std::uint64_t> counts;

    std::size_t past_clusters() const { return counts.rows(); }
    std::size_t future_clusters() const { return counts.cols(); }
    std::uint64_t row_total(std::size_t i) const {
        const auto r = counts.row(i);
        return std::accumulate(r.begin(), r.end(), std::uint64_t{0});
    }
};

inline ContingencyTable build_contingency(std::span<const std::int32_t> past_ids,
                                          std::span<const std::int32_t> future_ids,
                                          std::size_t k_past, std::size_t k_future) {
    if (past_ids.size() != future_ids.size())
        throw ConfigError("contingency: past and future id streams differ in length");
    ContingencyTable table{Array2D<std::uint64_t>(k_past, k_future, 0)};
    for (std::size_t p = 0; p < past_ids.size(); ++p) {
        const auto i = past_ids[p], j = future_ids[p];
        if (i < 0 || static_cast<std::size_t>(i) >= k_past || j < 0 || static_cast<std::size_t>(j) >= k_future)
            throw ConfigError("contingency: cluster id out of range at point " + std::to_string(p));
        ++table.counts(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    return table;
}

// One accepted merge: the two groups' member clusters and the test outcome.
struct MergeRecord {
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    double statistic = 0.0;
    double critical = 0.0;
    int dof = 0;
};

struct PsiMap {
    std::vector<std::int32_t> mapping;       // past cluster -> state
    Array2D<std::uint64_t> state_counts;      // pooled future-cluster counts per state
    Matrix state_pmfs;                        // Pr(future cluster | state)
    std::vector<MergeRecord> merges;          // not serialized

    std::size_t n_states() const { return state_pmfs.rows(); }
};

namespace detail {
inline std::vector<double> normalized(std::span<const std::uint64_t> counts) {
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
    std::vector<double> p(counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j) p[j] = static_cast<double>(counts[j]) / total;
    return p;
}

inline double l1(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]);
    return s;
}
} // namespace detail

// Greedy agglomeration: repeatedly take the pair of groups whose pooled
// distributions are closest in L1 (lowest indices on ties); merge it unless the
// chi-square test rejects homogeneity, in which case stop. States are numbered
// by descending pooled count, ties by smallest member cluster. Past clusters
// with no counts join state 0.
inline PsiMap agglomerate(const ContingencyTable& table, double alpha) {
    const std::size_t kp = table.past_clusters(), kf = table.future_clusters();
    struct Group {
        std::vector<std::size_t> members;
        std::vector<std::uint64_t> counts;
        std::uint64_t total = 0;
    };
    std::vector<Group> groups;
    for (std::size_t i = 0; i < kp; ++i) {
        const auto row = table.counts.row(i);
        Group g{{i}, {row.begin(), row.end()}, table.row_total(i)};
        if (g.total > 0) groups.push_back(std::move(g));
    }
    if (groups.empty()) throw ConfigError("agglomerate: contingency table has no nonempty row");

    PsiMap psi;
    while (groups.size() > 1) {
        std::vector<std::vector<double>> dist(groups.size());
        for (std::size_t g = 0; g < groups.size(); ++g) dist[g] = detail::normalized(groups[g].counts);
        std::size_t bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < groups.size(); ++i)
            for (std::size_t j = i + 1; j < groups.size(); ++j)
                if (const double d = detail::l1(dist[i], dist[j]); d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
        const auto test = homogeneity_test(groups[bi].counts, groups[bj].counts, alpha);
        if (test.reject) break;
        psi.merges.push_back({groups[bi].members, groups[bj].members, test.statistic, test.critical, test.dof});
        auto& a = groups[bi];
        auto& b = groups[bj];
        a.members.insert(a.members.end(), b.members.begin(), b.members.end());
        std::sort(a.members.begin(), a.members.end());
        for (std::size_t j = 0; j < kf; ++j) a.counts[j] += b.counts[j];
        a.total += b.total;
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
        if (a.total != b.total) return a.total > b.total;
        return a.members.front() < b.members.front();
    });
    psi.mapping.assign(kp, 0);
    psi.state_counts = Array2D<std::uint64_t>(groups.size(), kf, 0);
    psi.state_pmfs = Matrix(groups.size(), kf, 0.0);
    for (std::size_t s = 0; s < groups.size(); ++s) {
        for (auto m : groups[s].members) psi.mapping[m] = static_cast<std::int32_t>(s);
        std::copy(groups[s].counts.begin(), groups[s].counts.end(), psi.state_counts.row(s).begin());
        const auto p = detail::normalized(groups[s].counts);
        std::copy(p.begin(), p.end(), psi.state_pmfs.row(s).begin());
    }
    return psi;
}

} // namespace lcs
