#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "lcs/kmeans.hpp"
#include "oracles.hpp"

using namespace lcs;

namespace {
Matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix m(n, d);
    for (auto& v : m.data()) v = u(gen);
    return m;
}
} // namespace

TEST(KMeans, SingleClusterIsMean) {
    const auto data = random_matrix(500, 7, 1);
    const auto res = kmeans_euclidean(data, {1, 3, 100, 1e-9});
    ASSERT_EQ(res.centroids.rows(), 1u);
    for (std::size_t d = 0; d < 7; ++d) {
        double mean = 0;
        for (std::size_t i = 0; i < 500; ++i) mean += data(i, d);
        mean /= 500;
        EXPECT_NEAR(res.centroids(0, d), mean, 1e-12);
    }
}

TEST(KMeans, TwoSeparatedCloudsMatchBruteForce) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix data(12, 3);
        for (std::size_t i = 0; i < 12; ++i)
            for (std::size_t d = 0; d < 3; ++d) data(i, d) = (i < 5 ? 0.1 : 0.9) + jitter(gen);
        const auto res = kmeans_euclidean(data, {2, static_cast<std::uint64_t>(trial), 100, 0.0});
        ASSERT_EQ(res.centroids.rows(), 2u);
        for (std::size_t i = 1; i < 5; ++i) EXPECT_EQ(res.labels[i], res.labels[0]);
        for (std::size_t i = 6; i < 12; ++i) EXPECT_EQ(res.labels[i], res.labels[5]);
        EXPECT_NE(res.labels[0], res.labels[5]);
        EXPECT_NEAR(res.inertia, oracle::brute_force_two_means(data), 1e-12);
    }
}

TEST(KMeans, InertiaNeverIncreases) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto data = random_matrix(400, 5, seed);
        const auto res = kmeans_euclidean(data, {8, seed, 200, 0.0});
        for (std::size_t i = 1; i < res.inertia_history.size(); ++i)
            EXPECT_LE(res.inertia_history[i], res.inertia_history[i - 1] * (1 + 1e-12));
    }
}

TEST(KMeans, EveryPointAtNearestCentroidAndNoEmptyClusters) {
    const auto data = random_matrix(1000, 4, 5);
    const auto res = kmeans_euclidean(data, {10, 9, 300, 1e-8});
    std::uint64_t total = 0;
    for (auto c : res.counts) {
        EXPECT_GT(c, 0u);
        total += c;
    }
    EXPECT_EQ(total, 1000u);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::int32_t arg = -1;
        for (std::size_t j = 0; j < res.centroids.rows(); ++j) {
            double d = 0;
            for (std::size_t k = 0; k < 4; ++k) d += std::pow(data(i, k) - res.centroids(j, k), 2);
            if (d < best) {
                best = d;
                arg = static_cast<std::int32_t>(j);
            }
        }
        EXPECT_EQ(res.labels[i], arg);
    }
}

TEST(KMeans, FewerDistinctPointsThanK) {
    Matrix data(40, 3, 0.25);
    for (std::size_t i = 20; i < 40; ++i) data(i, 0) = 0.75;
    const auto res = kmeans_euclidean(data, {10, 1, 50, 1e-6});
    EXPECT_EQ(res.centroids.rows(), 2u);
    Matrix constant(30, 2, 0.5);
    const auto one = kmeans_euclidean(constant, {10, 1, 50, 1e-6});
    ASSERT_EQ(one.centroids.rows(), 1u);
    EXPECT_EQ(one.centroids(0, 0), 0.5);
    EXPECT_EQ(one.inertia, 0.0);
}

TEST(KMeans, Errors) {
    EXPECT_THROW(kmeans_euclidean(random_matrix(3, 2, 1), {4, 0, 10, 0.0}), ConfigError);
    auto bad = random_matrix(10, 2, 1);
    bad(3, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(kmeans_euclidean(bad, {2, 0, 10, 0.0}), NumericalError);
}

TEST(KMeans, DeterministicAcrossThreadCounts) {
    const auto data = random_matrix(20000, 6, 8);
    set_num_threads(1);
    const auto a = kmeans_euclidean(data, {7, 4, 100, 1e-9});
    set_num_threads(4);
    const auto b = kmeans_euclidean(data, {7, 4, 100, 1e-9});
    set_num_threads(1);
    EXPECT_EQ(a.centroids, b.centroids);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_EQ(a.inertia_history, b.inertia_history);
}

TEST(WeightedKMeans, EqualsEuclideanOnScaledData) {
    const LightconeShape shape{2, 1, 1, 1.0};
    const auto data = random_matrix(800, shape.past_size(), 21);
    const auto weighted = kmeans(data, shape, ConeKind::past, {6, 2, 100, 1e-8});
    auto scaled = data;
    const auto w = decay_weights(shape, ConeKind::past);
    for (std::size_t i = 0; i < scaled.rows(); ++i)
        for (std::size_t d = 0; d < w.size(); ++d) scaled(i, d) *= std::sqrt(w[d]);
    const auto plain = kmeans_euclidean(scaled, {6, 2, 100, 1e-8});
    EXPECT_EQ(weighted.fit.labels, plain.labels);
    for (std::size_t j = 0; j < plain.centroids.rows(); ++j)
        for (std::size_t d = 0; d < w.size(); ++d)
            EXPECT_NEAR(weighted.model.centroids(j, d), plain.centroids(j, d) / std::sqrt(w[d]), 1e-12);
}

TEST(Assign, NearestWithLowestIdOnTies) {
    const LightconeShape shape{1, 1, 1, 0.0};
    ClusterModel m{shape, ConeKind::future, Matrix(6, 3, 0.0), std::vector<std::uint64_t>(6, 1), 0.0};
    for (std::size_t j = 0; j < 6; ++j)
        for (std::size_t d = 0; d < 3; ++d) m.centroids(j, d) = 0.1 * static_cast<double>(j);
    EXPECT_EQ(assign(m, std::vector<double>{0.3, 0.3, 0.3}), 3);
    // Centroids 2 and 5 at equal distance from the query; everything else farther.
    m.centroids(2, 0) = 0.0, m.centroids(2, 1) = 0.0, m.centroids(2, 2) = 0.0;
    m.centroids(5, 0) = 1.0, m.centroids(5, 1) = 0.0, m.centroids(5, 2) = 0.0;
    for (std::size_t j : {0, 1, 3, 4})
        for (std::size_t d = 0; d < 3; ++d) m.centroids(j, d) = 5.0;
    EXPECT_EQ(assign(m, std::vector<double>{0.5, 0.0, 0.0}), 2);
    EXPECT_THROW(assign(m, std::vector<double>{0.5, 0.0}), ConfigError);
}

TEST(Assign, MatchesExhaustiveScan) {
    const LightconeShape shape{3, 1, 1, 0.7};
    const auto res = kmeans(random_matrix(600, shape.past_size(), 3), shape, ConeKind::past, {9, 1, 100, 1e-8});
    const auto w = decay_weights(shape, ConeKind::past);
    const auto queries = random_matrix(300, shape.past_size(), 4);
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        double best = std::numeric_limits<double>::infinity();
        std::int32_t arg = -1;
        for (std::size_t j = 0; j < res.model.k(); ++j) {
            const double d = lc_distance(queries.row(q), res.model.centroids.row(j), w);
            if (d < best) {
                best = d;
                arg = static_cast<std::int32_t>(j);
            }
        }
        EXPECT_EQ(assign(res.model, queries.row(q)), arg);
    }
}
