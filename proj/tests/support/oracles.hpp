#pragma once
// Reference implementations used only by the tests. They avoid the library's
// numerical routes on purpose. Binomial masses come from product enumeration
// in long double; special functions come from Boost.Math.

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// C(n, k) p^k (1-p)^(n-k) by a plain product, no logs.
inline long double binom_pmf(std::uint64_t k, std::uint64_t n, long double p) {
    if (k > n) return 0.0L;
    long double c = 1.0L;
    for (std::uint64_t i = 1; i <= k; ++i) c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    long double pk = 1.0L;
    for (std::uint64_t i = 0; i < k; ++i) pk *= p;
    long double qk = 1.0L;
    for (std::uint64_t i = 0; i < n - k; ++i) qk *= (1.0L - p);
    return c * pk * qk;
}

// Sum over every outcome j >= k of the enumerated masses.
inline long double binom_upper(std::uint64_t k, std::uint64_t n, long double p) {
    long double s = 0.0L;
    for (std::uint64_t j = k; j <= n; ++j) s += binom_pmf(j, n, p);
    return s;
}

inline long double binom_lower(std::uint64_t k, std::uint64_t n, long double p) {
    long double s = 0.0L;
    for (std::uint64_t j = 0; j <= k && j <= n; ++j) s += binom_pmf(j, n, p);
    return s;
}

inline long double poisson_pmf(std::uint64_t k, long double mean) {
    long double v = std::exp(-mean);
    for (std::uint64_t i = 1; i <= k; ++i) v = v * mean / static_cast<long double>(i);
    return v;
}

inline double ibeta(double a, double b, double x) { return boost::math::ibeta(a, b, x); }
inline double lgamma(double x) { return boost::math::lgamma(x); }

// Upper tail of the chi-squared distribution.
inline double chi2_sf(double stat, double dof) { return boost::math::gamma_q(dof / 2.0, stat / 2.0); }

// Asymptotic Kolmogorov distribution tail P(K > lambda), with the usual
// small-sample correction lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) D.
inline double kolmogorov_sf(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-16) break;
    }
    return std::min(1.0, std::max(0.0, sum));
}

// Exact error rate of a count-based decision rule for independent Poisson
// counts, truncated where the remaining mass is below `tail`.
template <typename Rule>
long double poisson_double_sum(long double mean_x, long double mean_y, Rule&& hit, long double tail = 1e-14L) {
    auto cutoff = [tail](long double m) {
        std::uint64_t k = 0;
        long double cdf = 0.0L;
        while (1.0L - cdf > tail) cdf += poisson_pmf(k++, m);
        return k;
    };
    const auto kx = cutoff(mean_x);
    const auto ky = cutoff(mean_y);
    long double s = 0.0L;
    for (std::uint64_t x = 0; x <= kx; ++x) {
        const long double px = poisson_pmf(x, mean_x);
        for (std::uint64_t y = 0; y <= ky; ++y) {
            if (hit(x, y)) s += px * poisson_pmf(y, mean_y);
        }
    }
    return s;
}

}  // namespace oracle
