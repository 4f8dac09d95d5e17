#include "safelevel/probkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "safelevel/errors.hpp"

namespace safelevel::probkit {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;
constexpr double kStirlingCutoff = 10.0;

// Remainder of Stirling's series, ln Γ(x) − [(x − ½) ln x − x + ½ ln 2π],
// valid for x >= kStirlingCutoff. Truncation error is below 1e-17 there.
double stirling_remainder_series(double x) {
    const double z = 1.0 / (x * x);
    return (1.0 / 12.0 +
            z * (-1.0 / 360.0 +
                 z * (1.0 / 1260.0 +
                      z * (-1.0 / 1680.0 +
                           z * (1.0 / 1188.0 + z * (-691.0 / 360360.0 + z * (1.0 / 156.0))))))) /
           x;
}

double stirling_base(double x) { return (x - 0.5) * std::log(x) - x + kHalfLog2Pi; }

// ln((i − 1)!) for i = 1..171, so that integer arguments hit exact zeros at 1
// and 2 and avoid cancellation in the upward recurrence.
constexpr int kFactorialTable = 171;
const std::array<double, kFactorialTable>& log_factorials() {
    static const auto table = [] {
        std::array<double, kFactorialTable> t{};
        double f = 1.0;
        for (int i = 0; i < kFactorialTable; ++i) {
            if (i > 1) f *= static_cast<double>(i);
            t[i] = std::log(f);
        }
        return t;
    }();
    return table;
}

double stirling_remainder(double x) {
    if (x >= kStirlingCutoff) return stirling_remainder_series(x);
    return log_gamma(x) - stirling_base(x);
}

// x^a (1 − x)^b / B(a, b), arranged so that large a and b do not lose
// precision through cancellation of ln Γ terms.
double beta_power_front(double a, double b, double x, double y) {
    const double sum = a + b;
    const double diff = x * b - y * a;  // x(a+b) − a == −[y(a+b) − b]

    const double ra = diff / a;
    const double term_a = std::abs(ra) < 0.5 ? a * std::log1p(ra)
                                             : a * (std::log(x) + std::log1p(b / a));
    const double rb = -diff / b;
    const double term_b = std::abs(rb) < 0.5 ? b * std::log1p(rb)
                                             : b * (std::log(y) + std::log1p(a / b));

    const double log_front = term_a + term_b + 0.5 * std::log(a * b / sum) - kHalfLog2Pi -
                             stirling_remainder(a) - stirling_remainder(b) +
                             stirling_remainder(sum);
    return std::exp(log_front);
}

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-16;
    constexpr int kMaxIterations = 1'000'000;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw DomainError("reg_inc_beta: continued fraction did not converge");
}

void require_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError(std::string(what) + ": probability must lie in [0, 1]");
    }
}

double log_choose(std::uint64_t n, std::uint64_t k) {
    const auto nd = static_cast<double>(n);
    const auto kd = static_cast<double>(k);
    return log_gamma(nd + 1.0) - log_gamma(kd + 1.0) - log_gamma(nd - kd + 1.0);
}

// Assumes 0 < p < 1 and k <= n.
double binom_pmf_interior(std::uint64_t k, std::uint64_t n, double p) {
    const auto kd = static_cast<double>(k);
    const auto nd = static_cast<double>(n);
    return std::exp(log_choose(n, k) + kd * std::log(p) + (nd - kd) * std::log1p(-p));
}

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0) || std::isinf(x)) throw DomainError("log_gamma: argument must be positive and finite");
    if (x <= kFactorialTable && x == std::floor(x)) return log_factorials()[static_cast<int>(x) - 1];
    if (x >= kStirlingCutoff) return stirling_base(x) + stirling_remainder_series(x);
    double product = 1.0;
    while (x < kStirlingCutoff) {
        product *= x;
        x += 1.0;
    }
    return stirling_base(x) + stirling_remainder_series(x) - std::log(product);
}

double log_beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("log_beta: parameters must be positive");
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double reg_inc_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || std::isinf(a) || std::isinf(b)) {
        throw DomainError("reg_inc_beta: shape parameters must be positive and finite");
    }
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("reg_inc_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    const double y = 1.0 - x;
    if (x > (a + 1.0) / (a + b + 2.0)) {
        return 1.0 - beta_power_front(b, a, y, x) * beta_continued_fraction(b, a, y) / b;
    }
    return beta_power_front(a, b, x, y) * beta_continued_fraction(a, b, x) / a;
}

double binom_pmf(std::uint64_t k, std::uint64_t n, double p) {
    require_probability(p, "binom_pmf");
    if (k > n) throw DomainError("binom_pmf: k must not exceed n");
    if (p == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p == 1.0) return k == n ? 1.0 : 0.0;
    return binom_pmf_interior(k, n, p);
}

namespace detail {

double binom_upper_tail_by_summation(std::uint64_t k, std::uint64_t n, double p) {
    double total = 0.0;
    for (std::uint64_t j = n + 1; j-- > k;) total += binom_pmf(j, n, p);
    return std::min(total, 1.0);
}

double binom_upper_tail_by_beta(std::uint64_t k, std::uint64_t n, double p) {
    if (k == 0) return 1.0;
    if (k > n) return 0.0;
    return reg_inc_beta(static_cast<double>(k), static_cast<double>(n - k + 1), p);
}

}  // namespace detail

double binom_upper_tail(std::uint64_t k, std::uint64_t n, double p) {
    require_probability(p, "binom_upper_tail");
    if (k > n + 1) throw DomainError("binom_upper_tail: k must not exceed n + 1");
    if (k == 0) return 1.0;
    if (k > n) return 0.0;
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    if (n > kSummationLimit) return detail::binom_upper_tail_by_beta(k, n, p);
    return detail::binom_upper_tail_by_summation(k, n, p);
}

double binom_lower_tail(std::uint64_t k, std::uint64_t n, double p) {
    require_probability(p, "binom_lower_tail");
    if (k >= n) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;
    if (n > kSummationLimit) {
        return reg_inc_beta(static_cast<double>(n - k), static_cast<double>(k + 1), 1.0 - p);
    }
    double total = 0.0;
    for (std::uint64_t j = 0; j <= k; ++j) total += binom_pmf_interior(j, n, p);
    return std::min(total, 1.0);
}

double poisson_pmf(std::uint64_t k, double mean) {
    if (!(mean >= 0.0) || std::isinf(mean)) throw DomainError("poisson_pmf: mean must be non-negative and finite");
    if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
    const auto kd = static_cast<double>(k);
    return std::exp(-mean + kd * std::log(mean) - log_gamma(kd + 1.0));
}

}  // namespace safelevel::probkit
