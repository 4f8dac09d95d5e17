#pragma once

// Probability kernel: special functions and exact discrete distributions.
// All functions are pure and throw DomainError on invalid arguments.

#include <cstdint>

namespace safelevel::probkit {

/// ln Γ(x) for x > 0.
double log_gamma(double x);

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b).
double log_beta(double a, double b);

/// Regularized incomplete beta function I_x(a, b).
double reg_inc_beta(double a, double b, double x);

/// C(n, k) p^k (1 − p)^(n − k).
double binom_pmf(std::uint64_t k, std::uint64_t n, double p);

/// P(X >= k) for X ~ Binomial(n, p). k may equal n + 1 (result 0).
double binom_upper_tail(std::uint64_t k, std::uint64_t n, double p);

/// P(X <= k) for X ~ Binomial(n, p).
double binom_lower_tail(std::uint64_t k, std::uint64_t n, double p);

/// e^(−mean) mean^k / k!
double poisson_pmf(std::uint64_t k, double mean);

/// Binomial tails switch from direct summation to the incomplete beta
/// route above this number of trials.
inline constexpr std::uint64_t kSummationLimit = 1000;

namespace detail {
// Exposed for cross-checking the two tail routes against each other.
double binom_upper_tail_by_summation(std::uint64_t k, std::uint64_t n, double p);
double binom_upper_tail_by_beta(std::uint64_t k, std::uint64_t n, double p);
}  // namespace detail

}  // namespace safelevel::probkit
