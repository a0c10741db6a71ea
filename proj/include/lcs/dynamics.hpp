#pragma once

// Stochastic cellular automaton over local causal states, estimated by
// counting (neighborhood -> successor) pairs in an encoded field.

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lcs/array2d.hpp"
#include "lcs/causal_states.hpp"
#include "lcs/errors.hpp"
#include "lcs/parallel.hpp"
#include "lcs/random.hpp"

namespace lcs {

using Neighborhood = std::vector<std::int32_t>;

struct RuleEntry {
    std::vector<std::uint64_t> counts; // successor histogram
    std::vector<double> pmf;           // counts / total
    std::uint64_t total = 0;
};

struct SCARule {
    int radius = 1;
    std::size_t n_states = 0;
    std::map<Neighborhood, RuleEntry> table; // observed neighborhoods only

    const RuleEntry* find(const Neighborhood& key) const {
        auto it = table.find(key);
        return it == table.end() ? nullptr : &it->second;
    }

    std::uint64_t total_count() const {
        std::uint64_t n = 0;
        for (const auto& [key, e] : table) n += e.total;
        return n;
    }
};

inline void normalize_entry(RuleEntry& e) {
    e.total = std::accumulate(e.counts.begin(), e.counts.end(), std::uint64_t{0});
    e.pmf.assign(e.counts.size(), 0.0);
    for (std::size_t s = 0; s < e.counts.size(); ++s)
        e.pmf[s] = static_cast<double>(e.counts[s]) / static_cast<double>(e.total);
}

// Counts every (neighborhood at t, state at t+1) pair with no margin label
// involved. n_states = 0 infers the alphabet as max label + 1.
inline SCARule estimate_phi(const StateField& states, int radius, std::size_t n_states = 0) {
    if (radius < 1) throw ConfigError("estimate_phi: radius must be >= 1");
    const std::size_t T = states.rows(), N = states.cols();
    if (N < static_cast<std::size_t>(2 * radius + 1)) throw ConfigError("estimate_phi: field narrower than 2c+1 sites");
    if (n_states == 0) {
        std::int32_t top = kMargin;
        for (auto s : states.data()) top = std::max(top, s);
        n_states = static_cast<std::size_t>(top + 1);
    }
    for (auto s : states.data())
        if (s != kMargin && (s < 0 || static_cast<std::size_t>(s) >= n_states))
            throw ConfigError("estimate_phi: label " + std::to_string(s) + " outside the state alphabet");

    SCARule rule{radius, n_states, {}};
    Neighborhood key(static_cast<std::size_t>(2 * radius + 1));
    for (std::size_t t = 0; t + 1 < T; ++t) {
        for (std::size_t r = 0; r < N; ++r) {
            const auto next = states(t + 1, r);
            if (next == kMargin) continue;
            bool ok = true;
            for (int dx = -radius; dx <= radius && ok; ++dx) {
                const auto s = states(t, wrap(static_cast<std::ptrdiff_t>(r) + dx, N));
                ok = s != kMargin;
                key[static_cast<std::size_t>(dx + radius)] = s;
            }
            if (!ok) continue;
            auto& e = rule.table[key];
            if (e.counts.empty()) e.counts.assign(n_states, 0);
            ++e.counts[static_cast<std::size_t>(next)];
        }
    }
    if (rule.table.empty()) throw ConfigError("estimate_phi: fewer than 2 consecutive usable rows");
    for (auto& [k, e] : rule.table) normalize_entry(e);
    return rule;
}

// Running estimate of the spatial distribution of states:
// H <- (1 - lambda) H + lambda hist(row).
struct SpatialDistribution {
    std::vector<double> mass;
    double lambda = 0.1;

    static SpatialDistribution from_row(std::span<const std::int32_t> row, std::size_t n_states, double lambda) {
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("spatial distribution: lambda must lie in [0, 1]");
        SpatialDistribution d{histogram(row, n_states), lambda};
        return d;
    }

    static std::vector<double> histogram(std::span<const std::int32_t> row, std::size_t n_states) {
        std::vector<double> h(n_states, 0.0);
        std::size_t n = 0;
        for (auto s : row) {
            if (s == kMargin) continue;
            if (s < 0 || static_cast<std::size_t>(s) >= n_states)
                throw ConfigError("spatial distribution: label outside the state alphabet");
            h[static_cast<std::size_t>(s)] += 1.0;
            ++n;
        }
        if (n == 0) throw ConfigError("spatial distribution: row has no labeled sites");
        for (auto& v : h) v /= static_cast<double>(n);
        return h;
    }

    void update(std::span<const std::int32_t> row) {
        const auto h = histogram(row, mass.size());
        double total = 0.0;
        for (std::size_t s = 0; s < mass.size(); ++s) total += (mass[s] = (1.0 - lambda) * mass[s] + lambda * h[s]);
        for (auto& v : mass) v /= total;
    }

    std::vector<double> cdf() const {
        std::vector<double> c(mass.size());
        double run = 0.0;
        for (std::size_t s = 0; s < mass.size(); ++s) c[s] = (run += mass[s]);
        return c;
    }
};

struct EvolveResult {
    StateField states;                    // steps x N
    std::vector<std::uint64_t> fallbacks; // per step: sites drawn from the spatial PMF
    SpatialDistribution spatial;          // state after the final step

    double fallback_rate(std::size_t step) const {
        return static_cast<double>(fallbacks[step]) / static_cast<double>(states.cols());
    }
    double overall_fallback_rate() const {
        if (states.empty()) return 0.0;
        const auto f = std::accumulate(fallbacks.begin(), fallbacks.end(), std::uint64_t{0});
        return static_cast<double>(f) / static_cast<double>(states.size());
    }
};

// Synchronous stochastic evolution. Row k of the result is the configuration
// k + 1 steps after `last_row`. Unseen neighborhoods draw from the spatial
// distribution, which is updated once each row is complete.
inline EvolveResult evolve_states(const SCARule& rule, std::span<const std::int32_t> last_row, std::size_t steps,
                                  std::uint64_t seed, SpatialDistribution spatial) {
    const std::size_t N = last_row.size();
    for (auto s : last_row)
        if (s == kMargin || s < 0 || static_cast<std::size_t>(s) >= rule.n_states)
            throw ConfigError("evolve_states: initial row must hold only valid state labels");
    if (spatial.mass.size() != rule.n_states) throw ConfigError("evolve_states: spatial distribution size mismatch");

    EvolveResult out{StateField(steps, N), std::vector<std::uint64_t>(steps, 0), {}};
    std::vector<std::int32_t> current(last_row.begin(), last_row.end()), next(N);
    std::vector<std::uint8_t> fell_back(N);
    const int c = rule.radius;
    for (std::size_t step = 0; step < steps; ++step) {
        const auto spatial_cdf = spatial.cdf();
        parallel_chunks(N, 1024, [&](std::size_t, std::size_t b, std::size_t e) {
            Neighborhood key(static_cast<std::size_t>(2 * c + 1));
            for (std::size_t r = b; r < e; ++r) {
                for (int dx = -c; dx <= c; ++dx)
                    key[static_cast<std::size_t>(dx + c)] = current[wrap(static_cast<std::ptrdiff_t>(r) + dx, N)];
                const double u = rng::uniform(seed, rng::Stream::dynamics, step, r);
                std::vector<double> cdf;
                if (const RuleEntry* entry = rule.find(key)) {
                    double run = 0.0;
                    cdf.resize(entry->pmf.size());
                    for (std::size_t s = 0; s < cdf.size(); ++s) cdf[s] = (run += entry->pmf[s]);
                    next[r] = static_cast<std::int32_t>(rng::sample_cdf(cdf, u));
                    fell_back[r] = 0;
                } else {
                    next[r] = static_cast<std::int32_t>(rng::sample_cdf(spatial_cdf, u));
                    fell_back[r] = 1;
                }
            }
        });
        for (std::size_t r = 0; r < N; ++r) out.fallbacks[step] += fell_back[r];
        current.swap(next);
        std::copy(current.begin(), current.end(), out.states.row(step).begin());
        spatial.update(current);
    }
    out.spatial = std::move(spatial);
    return out;
}

// Index of the last row without margin labels, or -1.
inline std::ptrdiff_t last_full_row(const StateField& states) {
    for (std::size_t t = states.rows(); t-- > 0;) {
        const auto row = states.row(t);
        if (std::none_of(row.begin(), row.end(), [](auto s) { return s == kMargin; }))
            return static_cast<std::ptrdiff_t>(t);
    }
    return -1;
}

struct ForecastOptions {
    std::size_t steps = 100;
    std::uint64_t seed = 0;         // latent evolution
    std::uint64_t decode_seed = 0;  // observable decoding
    double spatial_lambda = 0.1;
    DecodeWeighting weighting = DecodeWeighting::exponential;
};

struct ForecastResult {
    std::size_t start_row = 0;     // last encoded row the forecast continues from
    EvolveResult latent;           // rows start_row+1 .. start_row+steps
    Reconstruction observable;     // same rows, decoded
};

// Evolves the latent field from its last fully labeled row and decodes the
// result. The h_plus labeled rows ending at that row seed the decoder so the
// first forecast row is fully covered.
inline ForecastResult forecast(const EpsilonModel& model, const SCARule& rule, const StateField& states,
                               const ForecastOptions& opt) {
    const auto t0 = last_full_row(states);
    if (t0 < 0) throw ConfigError("forecast: state field has no fully labeled row");
    ForecastResult out;
    out.start_row = static_cast<std::size_t>(t0);
    const std::size_t N = states.cols();
    if (opt.steps == 0) {
        out.latent.states = StateField(0, N);
        out.observable = {SpacetimeField(0, N), Array2D<std::uint8_t>(0, N), SpacetimeField(0, N)};
        return out;
    }
    auto spatial = SpatialDistribution::from_row(states.row(out.start_row), model.n_states(), opt.spatial_lambda);
    out.latent = evolve_states(rule, states.row(out.start_row), opt.steps, opt.seed, std::move(spatial));

    const std::size_t context = std::min<std::size_t>(static_cast<std::size_t>(model.shape.h_plus), out.start_row + 1);
    const StateField combined = states.slice_rows(out.start_row + 1 - context, context).vstack(out.latent.states);
    Reconstruction full = decode(model, combined, opt.decode_seed, opt.weighting);
    out.observable = {full.values.slice_rows(context, opt.steps), full.covered.slice_rows(context, opt.steps),
                      full.weight_sums.slice_rows(context, opt.steps)};
    return out;
}

} // namespace lcs
