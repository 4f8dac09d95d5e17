#pragma once

// Beta-binomial comparator for the target share of events.
// The embedded BAV decision table lives here too.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "safelevel/rate_ratio.hpp"

namespace safelevel {

struct BetaPrior {
    double alpha = 1.0;
    double beta = 1.0;

    void validate() const;
};

struct BayesResult {
    /// P(target share > p0 | data).
    double posterior_deterioration = 0.5;
    double posterior_alpha = 1.0;
    double posterior_beta = 1.0;
    double p0 = 0.5;
};

/// Posterior Beta(alpha + y, beta + x) on the target share; the probability
/// that the share exceeds its null value t2 / (t1 + t2).
BayesResult posterior_deterioration_prob(const BetaPrior& prior, const CountWindow& reference,
                                         const CountWindow& target);

// --- Embedded decision table -------------------------------------------------

inline constexpr std::size_t kAndrasikRows = 6;     // reference events 0..5
inline constexpr std::size_t kAndrasikColumns = 8;  // target events 0..7

struct AndrasikTable {
    std::array<std::array<double, kAndrasikColumns>, kAndrasikRows> value{};
    /// "", "*" or "+" as published.
    std::array<std::array<std::string, kAndrasikColumns>, kAndrasikRows> marker{};
    int version = 0;
};

/// Parsed view of the embedded table (parsed once, immutable).
const AndrasikTable& andrasik_table();
/// The raw CSV text the table is parsed from.
const char* andrasik_table_csv();
/// Parses a table in the shipped CSV layout; throws DataError on malformed input.
AndrasikTable parse_andrasik_table(const std::string& csv);

/// Published (1 − p)-level for n_ref reference events (4-year period) and
/// n_target target events (1 year). Throws DomainError outside 0..5 × 0..7.
double andrasik_lookup(std::uint64_t n_ref, std::uint64_t n_target);

// --- Prior calibration ------------------------------------------------------

struct CalibrationResult {
    BetaPrior prior;
    double objective = 0.0;          ///< sum of squared residuals at `prior`
    double uniform_objective = 0.0;  ///< same objective at Beta(1, 1)
    double grid_objective = 0.0;     ///< best objective before local refinement
    /// fitted − published, [n_ref][n_target].
    std::array<std::array<double, kAndrasikColumns>, kAndrasikRows> residual{};
};

struct CalibrationGrid {
    double log10_min = -3.0;
    double log10_max = 3.0;
    int steps = 61;
};

/// Least-squares fit of a Beta prior to the embedded table: exhaustive
/// log-grid search followed by a Nelder-Mead pass in log10 space.
CalibrationResult calibrate_prior(const CalibrationGrid& grid = {});

/// Sum of squared differences between the posterior under `prior` (4:1
/// exposures) and the embedded table over all 48 cells.
double calibration_objective(const BetaPrior& prior);

// --- Severity-product model ---------------------------------------------------

struct SeverityCounts {
    std::uint64_t fatal_ref = 0;
    std::uint64_t fatal_target = 0;
    std::uint64_t serious_ref = 0;
    std::uint64_t serious_target = 0;
};

/// Product of the fatality and serious-injury binomial likelihoods, with the
/// target-period counts as successes.
double severity_product_likelihood(const SeverityCounts& counts, double p_fatal, double p_serious);

struct SeverityPosteriors {
    double fatal = 0.5;
    double serious = 0.5;
};

/// Independent Beta updates for fatalities and serious injuries. The two
/// probabilities are deliberately not combined.
SeverityPosteriors severity_posteriors(const BetaPrior& prior_fatal, const BetaPrior& prior_serious,
                                       const SeverityCounts& counts, double reference_exposure,
                                       double target_exposure);

// --- Comparator characterization ---------------------------------------------

struct ComparatorCell {
    std::uint64_t reference_events = 0;
    std::uint64_t target_events = 0;
    double bayes_p = 0.0;  ///< 1 − posterior deterioration probability
    double exact_p = 0.0;  ///< one-sided rate-ratio p-value
    double difference() const { return bayes_p - exact_p; }
};

/// Both p-values for every (x, y) with x + y <= max_total.
std::vector<ComparatorCell> comparator_study(const BetaPrior& prior, std::uint64_t max_total,
                                             double reference_exposure, double target_exposure);

}  // namespace safelevel
