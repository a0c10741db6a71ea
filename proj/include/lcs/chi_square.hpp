#pragma once

// Chi-square distribution functions and the two-sample homogeneity test used
// to decide whether two past clusters share a predictive distribution.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <utility>

#include "lcs/errors.hpp"

namespace lcs {

// Regularized lower incomplete gamma P(a, x).
inline double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw NumericalError("regularized_gamma_p: invalid argument");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    const double log_prefix = a * std::log(x) - x - std::lgamma(a);
    constexpr double eps = 1e-16;
    constexpr int max_iter = 100000;
    if (x < a + 1.0) {
        // Power series.
        double ap = a, term = 1.0 / a, sum = term;
        for (int i = 0; i < max_iter; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * eps) break;
        }
        return std::min(1.0, sum * std::exp(log_prefix));
    }
    // Continued fraction for Q(a, x), modified Lentz.
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < max_iter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return std::max(0.0, 1.0 - std::exp(log_prefix) * h);
}

inline double chi2_cdf(double x, double dof) {
    if (x <= 0.0) return 0.0;
    return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

// x such that chi2_cdf(x, dof) = p, by bracketing and bisection.
inline double chi2_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0) || !(dof > 0.0)) throw NumericalError("chi2_quantile: invalid argument");
    double lo = 0.0, hi = std::max(1.0, dof);
    while (chi2_cdf(hi, dof) < p) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_cdf(mid, dof) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// (1 - alpha) quantile, memoized per thread.
inline double chi2_critical(double alpha, int dof) {
    thread_local std::map<std::pair<double, int>, double> cache;
    const auto key = std::make_pair(alpha, dof);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const double q = chi2_quantile(1.0 - alpha, dof);
    cache.emplace(key, q);
    return q;
}

struct HomogeneityTest {
    double statistic = 0.0;
    int dof = 0;
    double critical = std::numeric_limits<double>::infinity();
    bool reject = false;
};

// Two-sample chi-square homogeneity test. Only bins with a positive pooled
// count take part; expected counts come from the pooled proportions scaled to
// each sample's total. No bin merging and no continuity correction.
inline HomogeneityTest homogeneity_test(std::span<const std::uint64_t> a,
                                        std::span<const std::uint64_t> b, double alpha) {
    if (a.size() != b.size()) throw ConfigError("chi2 test: histograms have different lengths");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("chi2 test: alpha must lie in (0, 1)");
    double na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        na += static_cast<double>(a[j]);
        nb += static_cast<double>(b[j]);
    }
    if (na == 0.0 || nb == 0.0) throw NumericalError("chi2 test: all-zero histogram");
    const double total = na + nb;
    HomogeneityTest out;
    int bins = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double pooled = static_cast<double>(a[j]) + static_cast<double>(b[j]);
        if (pooled == 0.0) continue;
        ++bins;
        const double ea = na * pooled / total, eb = nb * pooled / total;
        const double da = static_cast<double>(a[j]) - ea, db = static_cast<double>(b[j]) - eb;
        out.statistic += da * da / ea + db * db / eb;
    }
    out.dof = bins - 1;
    if (out.dof == 0) return out;
    out.critical = chi2_critical(alpha, out.dof);
    out.reject = out.statistic > out.critical;
    return out;
}

inline bool chi2_reject(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                        double alpha) {
    return homogeneity_test(a, b, alpha).reject;
}

} // namespace lcs
