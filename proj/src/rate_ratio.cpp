#include "safelevel/rate_ratio.hpp"

#include <algorithm>
#include <cmath>

#include "safelevel/errors.hpp"
#include "safelevel/probkit.hpp"

namespace safelevel {

void CountWindow::validate() const {
    if (!(exposure > 0.0) || std::isinf(exposure)) {
        throw DomainError("count window" + (label.empty() ? std::string() : " '" + label + "'") +
                          ": exposure must be positive and finite");
    }
}

double conditional_success_prob(double reference_exposure, double target_exposure,
                                double null_ratio) {
    if (!(reference_exposure > 0.0) || !(target_exposure > 0.0) || !(null_ratio > 0.0) ||
        std::isinf(reference_exposure) || std::isinf(target_exposure) || std::isinf(null_ratio)) {
        throw DomainError("conditional_success_prob: exposures and null ratio must be positive");
    }
    const double weighted_target = null_ratio * target_exposure;
    return weighted_target / (reference_exposure + weighted_target);
}

namespace {

// Two-sided p-value by the minimum-likelihood rule: total mass of outcomes
// whose probability does not exceed that of the observed one.
double min_likelihood_two_sided(std::uint64_t y, std::uint64_t n, double p0) {
    constexpr double kRelativeSlack = 1.0 + 1e-7;
    const double observed = probkit::binom_pmf(y, n, p0) * kRelativeSlack;
    double total = 0.0;
    for (std::uint64_t j = 0; j <= n; ++j) {
        const double mass = probkit::binom_pmf(j, n, p0);
        if (mass <= observed) total += mass;
    }
    return std::min(total, 1.0);
}

}  // namespace

RateRatioResult rate_ratio_test(const CountWindow& reference, const CountWindow& target,
                                double null_ratio, TwoSidedMethod method) {
    reference.validate();
    target.validate();

    RateRatioResult result;
    result.null_ratio = null_ratio;
    result.method = method;
    result.p0 = conditional_success_prob(reference.exposure, target.exposure, null_ratio);
    result.conditional_n = reference.events + target.events;
    if (result.conditional_n == 0) return result;

    const std::uint64_t n = result.conditional_n;
    const std::uint64_t y = target.events;
    result.p_one_sided = probkit::binom_upper_tail(y, n, result.p0);
    result.p_lower = probkit::binom_lower_tail(y, n, result.p0);
    switch (method) {
        case TwoSidedMethod::Central:
            result.p_two_sided = std::min(1.0, 2.0 * std::min(result.p_lower, result.p_one_sided));
            break;
        case TwoSidedMethod::MinLikelihood:
            result.p_two_sided = min_likelihood_two_sided(y, n, result.p0);
            break;
    }
    return result;
}

PTable generate_p_table(std::uint64_t max_ref, std::uint64_t max_target,
                        double reference_exposure, double target_exposure) {
    PTable table{max_ref, max_target, reference_exposure, target_exposure, {}};
    table.p.assign(max_ref + 1, std::vector<double>(max_target + 1, 1.0));
    for (std::uint64_t i = 0; i <= max_ref; ++i) {
        for (std::uint64_t j = 0; j <= max_target; ++j) {
            table.p[i][j] = rate_ratio_test({i, reference_exposure, {}}, {j, target_exposure, {}})
                                .p_one_sided;
        }
    }
    return table;
}

double round_half_up(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    // The nudge keeps values such as 0.0265 (stored as 0.026499999...) on the
    // side their decimal spelling suggests.
    return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

std::string to_string(TwoSidedMethod method) {
    switch (method) {
        case TwoSidedMethod::Central: return "central";
        case TwoSidedMethod::MinLikelihood: return "minlike";
    }
    return "central";
}

TwoSidedMethod two_sided_method_from_string(const std::string& name) {
    if (name == "central") return TwoSidedMethod::Central;
    if (name == "minlike") return TwoSidedMethod::MinLikelihood;
    throw DomainError("unknown two-sided method '" + name + "' (expected central or minlike)");
}

}  // namespace safelevel
