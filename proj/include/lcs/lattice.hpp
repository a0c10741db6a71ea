#pragma once

// Circle-map coupled map lattice on a periodic 1D ring:
//   x(r, t+1) = (1 - a) f(x(r,t)) + (a/2) [f(x(r+1,t)) + f(x(r-1,t))]   (mod 1)
//   f(x)      = x + omega - (kappa / 2pi) sin(2 pi x)                  (mod 1)

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "lcs/array2d.hpp"
#include "lcs/errors.hpp"
#include "lcs/parallel.hpp"
#include "lcs/random.hpp"

namespace lcs {

struct LatticeConfig {
    double omega = 0.5;
    double kappa = 1.0;
    double alpha = 1.0;
    std::size_t size = 2000;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(omega >= 0.0 && omega < 1.0))
            throw ConfigError("lattice: omega must lie in [0, 1)");
        if (!(kappa >= 0.0) || !std::isfinite(kappa))
            throw ConfigError("lattice: kappa must be finite and >= 0");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw ConfigError("lattice: alpha must lie in [0, 1]");
        if (size < 3) throw ConfigError("lattice: size must be >= 3");
    }
};

// Reduces v into [0, 1). Values that round up to 1 map to 0.
inline double mod1(double v) {
    double r = v - std::floor(v);
    return r >= 1.0 ? 0.0 : r;
}

inline double circle_map(double x, double omega, double kappa) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return mod1(x + omega - (kappa / two_pi) * std::sin(two_pi * x));
}

// One synchronous lattice update with periodic boundaries.
inline std::vector<double> step(const LatticeConfig& config, std::span<const double> row) {
    if (row.size() != config.size)
        throw ConfigError("lattice step: row length " + std::to_string(row.size()) +
                          " does not match lattice size " + std::to_string(config.size));
    const std::size_t n = row.size();
    std::vector<double> mapped(n), out(n);
    for (std::size_t r = 0; r < n; ++r) mapped[r] = circle_map(row[r], config.omega, config.kappa);
    const double a = config.alpha;
    parallel_for(n, [&](std::size_t r) {
        const double left = mapped[r == 0 ? n - 1 : r - 1];
        const double right = mapped[r + 1 == n ? 0 : r + 1];
        out[r] = mod1((1.0 - a) * mapped[r] + 0.5 * a * (right + left));
    }, 4096);
    return out;
}

// Iterates `steps` times from `row`; returns the `steps` successor rows.
inline SpacetimeField continue_from(const LatticeConfig& config, std::span<const double> row,
                                    std::size_t steps) {
    config.validate();
    SpacetimeField field(steps, config.size);
    std::vector<double> current(row.begin(), row.end());
    for (std::size_t t = 0; t < steps; ++t) {
        current = step(config, current);
        std::copy(current.begin(), current.end(), field.row(t).begin());
    }
    return field;
}

// i.i.d. uniform [0,1) initial row drawn from the config seed.
inline std::vector<double> initial_row(const LatticeConfig& config) {
    std::vector<double> row(config.size);
    for (std::size_t r = 0; r < config.size; ++r)
        row[r] = rng::uniform(config.seed, rng::Stream::lattice_init, r, 0);
    return row;
}

// Random initial row, `transient` discarded updates, then `steps` recorded
// rows. Row 0 is the first post-transient configuration.
inline SpacetimeField evolve(const LatticeConfig& config, std::size_t transient,
                             std::size_t steps) {
    config.validate();
    if (steps < 1) throw ConfigError("lattice evolve: steps must be >= 1");
    std::vector<double> row = initial_row(config);
    for (std::size_t t = 0; t < transient; ++t) row = step(config, row);
    SpacetimeField head(1, config.size, row);
    if (steps == 1) return head;
    return head.vstack(continue_from(config, row, steps - 1));
}

} // namespace lcs
