#pragma once

// Compound Poisson accident process with mixed severities.
// Also estimates error rates of the decision procedures by Monte Carlo.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "safelevel/classify.hpp"
#include "safelevel/errors.hpp"
#include "safelevel/random.hpp"

namespace safelevel::simulate {

/// A moment of the severity distribution does not exist.
class InfiniteMomentError : public DomainError {
public:
    using DomainError::DomainError;
};

struct ConstantSeverity {
    double value = 1.0;
};

/// Support [scale, ∞), density ∝ x^−(shape+1).
struct ParetoSeverity {
    double scale = 1.0;
    double shape = 3.0;
};

struct WeibullSeverity {
    double shape = 1.0;
    double scale = 1.0;
};

struct EmpiricalSeverity {
    std::vector<double> values;
    std::vector<double> probabilities;
};

using SeverityKind = std::variant<ConstantSeverity, ParetoSeverity, WeibullSeverity, EmpiricalSeverity>;

struct SeverityComponent {
    double weight = 1.0;
    SeverityKind kind;
};

/// Discrete mixture of severity distributions.
class SeverityModel {
public:
    SeverityModel() = default;
    explicit SeverityModel(std::vector<SeverityComponent> components);

    static SeverityModel constant(double value);

    const std::vector<SeverityComponent>& components() const { return components_; }

    /// Throws DomainError when weights or parameters are invalid.
    void validate() const;
    double sample(probkit::RandomStream& stream) const;
    /// E S; throws InfiniteMomentError when it does not exist.
    double mean() const;
    /// E S²; throws InfiniteMomentError when it does not exist.
    double second_moment() const;

private:
    std::vector<SeverityComponent> components_;
};

struct CompoundPoissonSpec {
    double rate = 0.0;      ///< events per exposure unit
    double exposure = 1.0;  ///< t
    SeverityModel severity = SeverityModel::constant(1.0);

    void validate() const;
};

struct ProcessRealization {
    std::vector<double> event_positions;  ///< sorted, within [0, exposure]
    std::vector<double> severities;
    std::uint64_t n_events = 0;
    double total_severity = 0.0;
};

/// One history: N ~ Poisson(rate·exposure), uniform positions, i.i.d. severities.
ProcessRealization simulate_process(const CompoundPoissonSpec& spec, probkit::RandomStream& stream);

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/// E X_t = λ t E S and V X_t = λ t E S².
Moments theoretical_moments(const CompoundPoissonSpec& spec);

struct MomentCheck {
    Moments theoretical;
    Moments sample;
    double stderr_mean = 0.0;
    double stderr_variance = 0.0;
    double mean_events = 0.0;
    std::uint64_t replications = 0;

    double z_mean() const;
    double z_variance() const;
};

/// Sample moments of X_t over independent replications. Replication r uses
/// stream.substream(r), so results do not depend on `workers`.
MomentCheck check_moments(const CompoundPoissonSpec& spec, std::uint64_t replications,
                          const probkit::RandomStream& stream, unsigned workers = 1);

struct VariationalCoefficients {
    double v_n = 0.0;
    double v_s = 0.0;
    double v_sn = 0.0;
};

/// Coefficients of variation for independent factors and their product S·N,
/// S and N, from Var(SN) = Var S·Var N + Var S·(E N)² + Var N·(E S)²,
/// i.e. v_SN² = v_S²·v_N² + v_S² + v_N².
VariationalCoefficients variational_coefficients(double n_mean, double n_var, double s_mean,
                                                 double s_var);

inline constexpr std::size_t kLossClasses = 7;
inline constexpr std::array<char, kLossClasses> kLossClassLabels{'A', 'B', 'C', 'D', 'E', 'F', 'G'};

/// Counts per loss class A..G for the intervals (−∞,b1], (b1,b2], …, (b6,∞).
std::array<std::uint64_t, kLossClasses> loss_class_histogram(std::span<const double> severities,
                                                             std::span<const double> boundaries);

// --- Error-rate estimation ------------------------------------------------------

struct RateRatioProcedure {
    PThresholds thresholds;
};

/// Decisions read from the embedded BAV table; counts beyond the table are
/// clipped to its last row/column.
struct AndrasikTableProcedure {
    PosteriorThresholds thresholds;
};

using Procedure = std::variant<RateRatioProcedure, AndrasikTableProcedure>;

std::string procedure_id(const Procedure& procedure);

struct ErrorRateStudy {
    Procedure procedure = RateRatioProcedure{};
    double rate_ref = 1.0;
    double rate_target_null = 1.0;
    double rate_target_alt = 1.0;
    double exposure_ref = 4.0;
    double exposure_target = 1.0;
    Category decision_counted = Category::ProbableDeterioration;
    std::uint64_t replications = 10000;

    void validate() const;
};

struct ErrorRateReport {
    std::string procedure_id;
    double alpha_hat = 0.0;
    double power_hat = 0.0;
    std::uint64_t replications = 0;
    double mc_stderr_alpha = 0.0;
    double mc_stderr_power = 0.0;
    std::uint64_t null_hits = 0;
    std::uint64_t alt_hits = 0;
    /// Fraction of replications whose counts were clipped to the table range
    /// (always 0 for the rate-ratio procedure).
    double clipped_fraction_null = 0.0;
    double clipped_fraction_alt = 0.0;
    double rate_target_alt = 0.0;
};

/// Decision of `procedure` for one pair of observed counts.
Decision decide(const Procedure& procedure, std::uint64_t reference_events,
                std::uint64_t target_events, double exposure_ref, double exposure_target);

/// Replication r draws its null-regime counts from stream.substream(2r) and
/// its alternative-regime counts from stream.substream(2r + 1).
ErrorRateReport estimate_error_rates(const ErrorRateStudy& study, const probkit::RandomStream& stream,
                                     unsigned workers = 1);

/// Power curve over candidate alternative target rates, with common random
/// numbers across candidates. Alternatives with power close to alpha are the
/// ones the procedure cannot distinguish from the null.
std::vector<ErrorRateReport> sweep_alternatives(const ErrorRateStudy& study,
                                                std::span<const double> alt_rates,
                                                const probkit::RandomStream& stream,
                                                unsigned workers = 1);

}  // namespace safelevel::simulate
