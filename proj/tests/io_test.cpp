#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "lcs/io.hpp"
#include "oracles.hpp"

using namespace lcs;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("lcs_io_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}
} // namespace

TEST(Lcsf, RoundTripDoubles) {
    std::mt19937_64 gen(1);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rows = gen() % 7, cols = gen() % 9;
        SpacetimeField a(rows, cols);
        for (auto& v : a.data()) v = std::uniform_real_distribution<>(-1e6, 1e6)(gen);
        if (!a.empty()) a.data()[0] = -0.0;
        EXPECT_EQ(io::decode_lcsf<double>(io::encode_lcsf(a)), a);
    }
}

TEST(Lcsf, RoundTripInts) {
    std::mt19937_64 gen(2);
    for (int trial = 0; trial < 50; ++trial) {
        StateField a(gen() % 7 + 1, gen() % 9 + 1);
        for (auto& v : a.data()) v = static_cast<std::int32_t>(gen());
        EXPECT_EQ(io::decode_lcsf<std::int32_t>(io::encode_lcsf(a)), a);
    }
}

TEST(Lcsf, LayoutIsLittleEndian) {
    StateField a(1, 2);
    a(0, 0) = 1;
    a(0, 1) = -1;
    const auto bytes = io::encode_lcsf(a);
    ASSERT_EQ(bytes.size(), 4u + 2 + 1 + 1 + 8 + 8 + 8 + 4);
    EXPECT_EQ(bytes.substr(0, 4), "LCSF");
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[5], 0);
    EXPECT_EQ(bytes[6], 1); // int32
    EXPECT_EQ(bytes[7], 2);
    EXPECT_EQ(bytes[8], 1);
    EXPECT_EQ(bytes[24], 1);
    EXPECT_EQ(static_cast<unsigned char>(bytes[28]), 0xFF);
}

TEST(Lcsf, DetectsCorruption) {
    SpacetimeField a(3, 4, 0.5);
    const auto good = io::encode_lcsf(a);
    for (std::size_t i = 0; i < good.size(); ++i) {
        auto bad = good;
        bad[i] = static_cast<char>(bad[i] ^ 0x10);
        EXPECT_THROW(io::decode_lcsf<double>(bad), IoError) << "byte " << i;
    }
    EXPECT_THROW(io::decode_lcsf<double>(good.substr(0, good.size() - 1)), IoError);
    EXPECT_THROW(io::decode_lcsf<double>(""), IoError);
    EXPECT_THROW(io::decode_lcsf<std::int32_t>(good), IoError);
}

TEST(Lcsf, FileRoundTripAndMissingFile) {
    const auto dir = temp_dir("file");
    SpacetimeField a(2, 3, 0.25);
    io::save_lcsf(dir / "a.lcsf", a);
    EXPECT_EQ(io::load_lcsf<double>(dir / "a.lcsf"), a);
    EXPECT_THROW(io::load_lcsf<double>(dir / "missing.lcsf"), IoError);
    for (const auto& e : fs::directory_iterator(dir)) EXPECT_EQ(e.path().filename(), "a.lcsf");
    fs::remove_all(dir);
}

TEST(Model, RoundTrip) {
    const auto m = oracle::random_model({4, 2, 2, 0.7}, 3, 6, 8, 5);
    const auto bytes = io::encode_model(m);
    const auto back = io::decode_model(bytes);
    EXPECT_EQ(back.shape.h_minus, 4);
    EXPECT_EQ(back.shape.h_plus, 2);
    EXPECT_EQ(back.shape.c, 2);
    EXPECT_EQ(back.shape.tau, 0.7);
    EXPECT_EQ(back.gamma_minus.centroids, m.gamma_minus.centroids);
    EXPECT_EQ(back.gamma_plus.centroids, m.gamma_plus.centroids);
    EXPECT_EQ(back.gamma_plus.counts, m.gamma_plus.counts);
    EXPECT_EQ(back.psi.mapping, m.psi.mapping);
    EXPECT_EQ(back.psi.state_counts, m.psi.state_counts);
    EXPECT_EQ(back.psi.state_pmfs, m.psi.state_pmfs);
    EXPECT_EQ(io::encode_model(back), bytes);

    auto bad = bytes;
    bad[bad.size() / 2] = static_cast<char>(bad[bad.size() / 2] ^ 1);
    EXPECT_THROW(io::decode_model(bad), IoError);
}

TEST(Rule, RoundTrip) {
    StateField s(20, 30);
    std::mt19937_64 gen(3);
    for (auto& v : s.data()) v = static_cast<std::int32_t>(gen() % 3);
    const auto rule = estimate_phi(s, 1, 4);
    const auto bytes = io::encode_rule(rule);
    const auto back = io::decode_rule(bytes);
    EXPECT_EQ(back.radius, 1);
    EXPECT_EQ(back.n_states, 4u);
    ASSERT_EQ(back.table.size(), rule.table.size());
    for (const auto& [key, e] : rule.table) {
        const auto* b = back.find(key);
        ASSERT_NE(b, nullptr);
        EXPECT_EQ(b->counts, e.counts);
        EXPECT_EQ(b->pmf, e.pmf);
        EXPECT_EQ(b->total, e.total);
    }
    EXPECT_EQ(io::encode_rule(back), bytes);
    EXPECT_THROW(io::decode_rule(bytes.substr(0, 20)), IoError);
    EXPECT_THROW(io::decode_rule(io::encode_lcsf(StateField(1, 1, 0))), IoError);
}
