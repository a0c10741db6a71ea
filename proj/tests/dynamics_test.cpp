#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lcs/dynamics.hpp"
#include "oracles.hpp"

using namespace lcs;

namespace {
StateField random_states(std::size_t T, std::size_t N, std::size_t S, std::uint64_t seed) {
    StateField s(T, N);
    std::mt19937_64 gen(seed);
    for (auto& v : s.data()) v = static_cast<std::int32_t>(gen() % S);
    return s;
}
} // namespace

TEST(EstimatePhi, WorkedExample) {
    // Two rows, four sites, radius 1.
    StateField s(2, 4);
    const std::int32_t top[] = {0, 1, 0, 1}, bottom[] = {1, 0, 1, 1};
    for (std::size_t r = 0; r < 4; ++r) {
        s(0, r) = top[r];
        s(1, r) = bottom[r];
    }
    const auto rule = estimate_phi(s, 1);
    EXPECT_EQ(rule.n_states, 2u);
    ASSERT_EQ(rule.table.size(), 2u);
    const auto* a = rule.find({1, 0, 1});
    const auto* b = rule.find({0, 1, 0});
    ASSERT_NE(a, nullptr);
    ASSERT_NE(b, nullptr);
    EXPECT_EQ(a->counts, (std::vector<std::uint64_t>{0, 2}));
    EXPECT_EQ(b->counts, (std::vector<std::uint64_t>{1, 1}));
    EXPECT_DOUBLE_EQ(b->pmf[0], 0.5);
    EXPECT_EQ(rule.find({1, 1, 1}), nullptr);
}

TEST(EstimatePhi, MatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t S = 2 + seed % 3;
        const int c = 1 + static_cast<int>(seed % 2);
        auto s = random_states(12, 15, S, seed);
        for (std::size_t r = 0; r < 15; ++r) s(0, r) = kMargin;
        s(7, 3) = kMargin;
        const auto rule = estimate_phi(s, c, S);
        const auto ref = oracle::naive_phi_counts(s, c, S);
        ASSERT_EQ(rule.table.size(), ref.size());
        std::uint64_t total = 0;
        for (const auto& [key, counts] : ref) {
            const auto* e = rule.find(key);
            ASSERT_NE(e, nullptr);
            EXPECT_EQ(e->counts, counts);
            double sum = 0;
            for (double p : e->pmf) sum += p;
            EXPECT_NEAR(sum, 1.0, 1e-12);
            total += e->total;
        }
        EXPECT_EQ(total, rule.total_count());
        // Pairs with any margin label are skipped: rows 0->1, 6->7 at 3 neighbors, 7->8 at 2c+1 sites.
        const std::uint64_t expected = 10 * 15 - 1 - static_cast<std::uint64_t>(2 * c + 1);
        EXPECT_EQ(total, expected);
    }
}

TEST(EstimatePhi, Errors) {
    EXPECT_THROW(estimate_phi(StateField(1, 5, 0), 1), ConfigError);
    EXPECT_THROW(estimate_phi(StateField(4, 5, kMargin), 1), ConfigError);
    EXPECT_THROW(estimate_phi(StateField(4, 2, 0), 1), ConfigError);
    EXPECT_THROW(estimate_phi(StateField(4, 5, 3), 1, 2), ConfigError);
}

TEST(SpatialDistribution, UpdateIsEma) {
    const std::vector<std::int32_t> a{0, 0, 1, 1}, b{2, 2, 2, 2};
    auto d = SpatialDistribution::from_row(a, 3, 0.25);
    EXPECT_EQ(d.mass, (std::vector<double>{0.5, 0.5, 0.0}));
    d.update(b);
    EXPECT_NEAR(d.mass[0], 0.375, 1e-15);
    EXPECT_NEAR(d.mass[2], 0.25, 1e-15);
    EXPECT_THROW(SpatialDistribution::from_row(a, 3, 1.5), ConfigError);
}

TEST(Evolve, PeriodTwoIsExact) {
    StateField s(10, 8);
    for (std::size_t t = 0; t < 10; ++t)
        for (std::size_t r = 0; r < 8; ++r) s(t, r) = static_cast<std::int32_t>((t + r) % 2);
    const auto rule = estimate_phi(s, 1);
    auto spatial = SpatialDistribution::from_row(s.row(9), 2, 0.1);
    const auto res = evolve_states(rule, s.row(9), 20, 4, spatial);
    for (std::size_t k = 0; k < 20; ++k) {
        EXPECT_EQ(res.fallbacks[k], 0u);
        for (std::size_t r = 0; r < 8; ++r) EXPECT_EQ(res.states(k, r), static_cast<std::int32_t>((10 + k + r) % 2));
    }
    EXPECT_EQ(res.overall_fallback_rate(), 0.0);
}

TEST(Evolve, UnseenNeighborhoodsFallBack) {
    StateField train(3, 6, 0);
    const auto rule = estimate_phi(train, 1, 2);
    const std::vector<std::int32_t> start(6, 1);
    const auto res = evolve_states(rule, start, 1, 9, SpatialDistribution::from_row(start, 2, 0.1));
    EXPECT_EQ(res.fallbacks[0], 6u);
    EXPECT_EQ(res.fallback_rate(0), 1.0);
    for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(res.states(0, r), 1); // spatial PMF is all state 1
}

TEST(Evolve, ConservesSitesAndReplays) {
    const auto s = random_states(30, 50, 4, 3);
    const auto rule = estimate_phi(s, 1);
    const auto spatial = SpatialDistribution::from_row(s.row(29), 4, 0.1);
    const auto a = evolve_states(rule, s.row(29), 25, 77, spatial);
    const auto b = evolve_states(rule, s.row(29), 25, 77, spatial);
    EXPECT_EQ(a.states, b.states);
    ASSERT_EQ(a.states.rows(), 25u);
    for (std::size_t k = 0; k < 25; ++k) {
        std::size_t count = 0;
        for (std::size_t st = 0; st < 4; ++st)
            for (std::size_t r = 0; r < 50; ++r) count += a.states(k, r) == static_cast<std::int32_t>(st);
        EXPECT_EQ(count, 50u);
    }
    double sum = 0;
    for (double m : a.spatial.mass) sum += m;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    const auto c = evolve_states(rule, s.row(29), 25, 78, spatial);
    EXPECT_NE(a.states, c.states);
}

TEST(Evolve, Errors) {
    const auto s = random_states(5, 6, 2, 1);
    const auto rule = estimate_phi(s, 1);
    std::vector<std::int32_t> bad(6, 0);
    bad[2] = kMargin;
    EXPECT_THROW(evolve_states(rule, bad, 1, 0, SpatialDistribution::from_row(s.row(0), 2, 0.1)), ConfigError);
    EXPECT_THROW(evolve_states(rule, s.row(0), 1, 0, SpatialDistribution::from_row(s.row(0), 3, 0.1)), ConfigError);
}

TEST(Forecast, StartsFromLastFullRow) {
    const LightconeShape shape{2, 1, 1, 1.0};
    const auto m = oracle::random_model(shape, 3, 5, 6, 2);
    auto s = random_states(20, 12, 3, 5);
    for (std::size_t r = 0; r < 12; ++r) s(0, r) = s(1, r) = s(19, r) = kMargin;
    EXPECT_EQ(last_full_row(s), 18);
    const auto rule = estimate_phi(s, 1);
    ForecastOptions opt;
    opt.steps = 7;
    opt.seed = 3;
    opt.decode_seed = 4;
    const auto f = forecast(m, rule, s, opt);
    EXPECT_EQ(f.start_row, 18u);
    ASSERT_EQ(f.latent.states.rows(), 7u);
    ASSERT_EQ(f.observable.values.rows(), 7u);
    for (auto c : f.observable.covered.data()) EXPECT_EQ(c, 1);
    for (double v : f.observable.values.data()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    // Decoding the context row plus the forecast reproduces the observable.
    const auto combined = s.slice_rows(18, 1).vstack(f.latent.states);
    const auto ref = oracle::naive_decode(m, combined, 4);
    for (std::size_t k = 0; k < 7; ++k)
        for (std::size_t r = 0; r < 12; ++r) EXPECT_NEAR(f.observable.values(k, r), ref(k + 1, r), 1e-12);

    opt.steps = 0;
    const auto empty = forecast(m, rule, s, opt);
    EXPECT_EQ(empty.latent.states.rows(), 0u);
    EXPECT_EQ(empty.observable.values.cols(), 12u);
    EXPECT_THROW(forecast(m, rule, StateField(3, 12, kMargin), opt), ConfigError);
}
