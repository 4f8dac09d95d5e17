#pragma once

// Exact conditional rate-ratio test for two Poisson counts with exposures.
//
// Given x events over exposure t1 (reference) and y events over exposure t2
// (target), the number of target events conditional on n = x + y is
// Binomial(n, p0) with p0 = ρ0·t2 / (t1 + ρ0·t2) under H0: λ2 = ρ0·λ1.
// Deterioration means the target rate exceeds the reference rate, so the
// one-sided p-value is the upper tail P(Y >= y | n, p0).

#include <cstdint>
#include <string>
#include <vector>

namespace safelevel {

/// An event count paired with the operational exposure it was observed over.
struct CountWindow {
    std::uint64_t events = 0;
    double exposure = 1.0;
    std::string label;

    /// Throws DomainError if exposure is not strictly positive and finite.
    void validate() const;
};

enum class TwoSidedMethod {
    Central,  ///< min(1, 2·min(lower tail, upper tail))
    MinLikelihood,  ///< sum of outcomes no more likely than the observed one
};

struct RateRatioResult {
    double p_one_sided = 1.0;
    double p_two_sided = 1.0;
    double p_lower = 1.0;  ///< P(Y <= y | n, p0)
    std::uint64_t conditional_n = 0;
    double p0 = 0.5;
    double null_ratio = 1.0;
    TwoSidedMethod method = TwoSidedMethod::Central;
};

/// Probability that a single event falls into the target window under H0.
double conditional_success_prob(double reference_exposure, double target_exposure,
                                double null_ratio = 1.0);

RateRatioResult rate_ratio_test(const CountWindow& reference, const CountWindow& target,
                                double null_ratio = 1.0,
                                TwoSidedMethod method = TwoSidedMethod::Central);

/// Row-major matrix of one-sided p-values, [reference events][target events].
struct PTable {
    std::uint64_t max_ref = 0;
    std::uint64_t max_target = 0;
    double reference_exposure = 1.0;
    double target_exposure = 1.0;
    std::vector<std::vector<double>> p;
};

PTable generate_p_table(std::uint64_t max_ref, std::uint64_t max_target,
                        double reference_exposure, double target_exposure);

/// Half-up rounding to `decimals` places, as used for tabular display.
double round_half_up(double value, int decimals);

std::string to_string(TwoSidedMethod method);
TwoSidedMethod two_sided_method_from_string(const std::string& name);

}  // namespace safelevel
