#include "safelevel/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "safelevel/bayes.hpp"
#include "safelevel/probkit.hpp"
#include "safelevel/rate_ratio.hpp"

namespace safelevel::simulate {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kWeightTolerance = 1e-12;

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

void validate_kind(const SeverityKind& kind) {
    std::visit(Overloaded{
                   [](const ConstantSeverity& c) {
                       if (!positive_finite(c.value)) throw DomainError("constant severity must be positive");
                   },
                   [](const ParetoSeverity& p) {
                       if (!positive_finite(p.scale) || !positive_finite(p.shape)) {
                           throw DomainError("pareto severity needs positive scale and shape");
                       }
                   },
                   [](const WeibullSeverity& w) {
                       if (!positive_finite(w.shape) || !positive_finite(w.scale)) {
                           throw DomainError("weibull severity needs positive shape and scale");
                       }
                   },
                   [](const EmpiricalSeverity& e) {
                       if (e.values.empty() || e.values.size() != e.probabilities.size()) {
                           throw DomainError("empirical severity needs matching, non-empty values and probabilities");
                       }
                       double total = 0.0;
                       for (std::size_t i = 0; i < e.values.size(); ++i) {
                           if (!positive_finite(e.values[i])) throw DomainError("empirical severity values must be positive");
                           if (!(e.probabilities[i] >= 0.0)) throw DomainError("empirical probabilities must be non-negative");
                           total += e.probabilities[i];
                       }
                       if (std::abs(total - 1.0) > kWeightTolerance) {
                           throw DomainError("empirical severity probabilities must sum to 1");
                       }
                   },
               },
               kind);
}

double sample_kind(const SeverityKind& kind, probkit::RandomStream& stream) {
    return std::visit(Overloaded{
                          [](const ConstantSeverity& c) { return c.value; },
                          [&](const ParetoSeverity& p) {
                              return p.scale * std::pow(stream.uniform(), -1.0 / p.shape);
                          },
                          [&](const WeibullSeverity& w) {
                              return w.scale * std::pow(-std::log(stream.uniform()), 1.0 / w.shape);
                          },
                          [&](const EmpiricalSeverity& e) {
                              const double u = stream.uniform();
                              double cdf = 0.0;
                              for (std::size_t i = 0; i < e.values.size(); ++i) {
                                  cdf += e.probabilities[i];
                                  if (u <= cdf) return e.values[i];
                              }
                              return e.values.back();
                          },
                      },
                      kind);
}

double kind_moment(const SeverityKind& kind, int order) {
    return std::visit(
        Overloaded{
            [&](const ConstantSeverity& c) { return std::pow(c.value, order); },
            [&](const ParetoSeverity& p) {
                if (p.shape <= order) {
                    throw InfiniteMomentError("pareto severity with shape " + std::to_string(p.shape) +
                                              " has no finite moment of order " + std::to_string(order));
                }
                return p.shape * std::pow(p.scale, order) / (p.shape - order);
            },
            [&](const WeibullSeverity& w) {
                return std::pow(w.scale, order) * std::exp(probkit::log_gamma(1.0 + order / w.shape));
            },
            [&](const EmpiricalSeverity& e) {
                double total = 0.0;
                for (std::size_t i = 0; i < e.values.size(); ++i) {
                    total += e.probabilities[i] * std::pow(e.values[i], order);
                }
                return total;
            },
        },
        kind);
}

// Runs body(begin, end) over [0, count) split into contiguous chunks.
template <class Body>
void parallel_chunks(std::uint64_t count, unsigned workers, Body body) {
    workers = std::max(1u, workers);
    if (workers == 1 || count < 2) {
        body(std::uint64_t{0}, count);
        return;
    }
    const std::uint64_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> threads;
    for (std::uint64_t begin = 0; begin < count; begin += chunk) {
        threads.emplace_back(body, begin, std::min(count, begin + chunk));
    }
    for (auto& t : threads) t.join();
}

}  // namespace

SeverityModel::SeverityModel(std::vector<SeverityComponent> components)
    : components_(std::move(components)) {
    validate();
}

SeverityModel SeverityModel::constant(double value) {
    return SeverityModel({SeverityComponent{1.0, ConstantSeverity{value}}});
}

void SeverityModel::validate() const {
    if (components_.empty()) throw DomainError("severity model needs at least one component");
    double total = 0.0;
    for (const auto& c : components_) {
        if (!(c.weight >= 0.0 && c.weight <= 1.0)) throw DomainError("severity weights must lie in [0, 1]");
        total += c.weight;
        validate_kind(c.kind);
    }
    if (std::abs(total - 1.0) > kWeightTolerance) throw DomainError("severity weights must sum to 1");
}

double SeverityModel::sample(probkit::RandomStream& stream) const {
    if (components_.size() == 1) return sample_kind(components_.front().kind, stream);
    const double u = stream.uniform();
    double cdf = 0.0;
    for (const auto& c : components_) {
        cdf += c.weight;
        if (u <= cdf) return sample_kind(c.kind, stream);
    }
    return sample_kind(components_.back().kind, stream);
}

double SeverityModel::mean() const {
    double total = 0.0;
    for (const auto& c : components_) {
        if (c.weight > 0.0) total += c.weight * kind_moment(c.kind, 1);
    }
    return total;
}

double SeverityModel::second_moment() const {
    double total = 0.0;
    for (const auto& c : components_) {
        if (c.weight > 0.0) total += c.weight * kind_moment(c.kind, 2);
    }
    return total;
}

void CompoundPoissonSpec::validate() const {
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("process rate must be non-negative");
    if (!positive_finite(exposure)) throw DomainError("process exposure must be positive");
    severity.validate();
}

ProcessRealization simulate_process(const CompoundPoissonSpec& spec, probkit::RandomStream& stream) {
    spec.validate();
    ProcessRealization out;
    out.n_events = probkit::sample_poisson(spec.rate * spec.exposure, stream);
    out.event_positions.reserve(out.n_events);
    out.severities.reserve(out.n_events);
    for (std::uint64_t i = 0; i < out.n_events; ++i) {
        out.event_positions.push_back(spec.exposure * stream.uniform());
    }
    std::sort(out.event_positions.begin(), out.event_positions.end());
    for (std::uint64_t i = 0; i < out.n_events; ++i) {
        out.severities.push_back(spec.severity.sample(stream));
        out.total_severity += out.severities.back();
    }
    return out;
}

Moments theoretical_moments(const CompoundPoissonSpec& spec) {
    spec.validate();
    const double intensity = spec.rate * spec.exposure;
    const double second = spec.severity.second_moment();  // also guards the first moment
    return {intensity * spec.severity.mean(), intensity * second};
}

namespace {

double z_score(double observed, double expected, double stderr_value) {
    if (stderr_value > 0.0) return (observed - expected) / stderr_value;
    return observed == expected ? 0.0 : std::copysign(INFINITY, observed - expected);
}

}  // namespace

double MomentCheck::z_mean() const { return z_score(sample.mean, theoretical.mean, stderr_mean); }

double MomentCheck::z_variance() const {
    return z_score(sample.variance, theoretical.variance, stderr_variance);
}

MomentCheck check_moments(const CompoundPoissonSpec& spec, std::uint64_t replications,
                          const probkit::RandomStream& stream, unsigned workers) {
    if (replications < 2) throw DomainError("check_moments: need at least two replications");
    MomentCheck check;
    check.theoretical = theoretical_moments(spec);
    check.replications = replications;

    std::vector<double> totals(replications);
    std::vector<std::uint64_t> counts(replications);
    parallel_chunks(replications, workers, [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t r = begin; r < end; ++r) {
            auto local = stream.substream(r);
            const auto realization = simulate_process(spec, local);
            totals[r] = realization.total_severity;
            counts[r] = realization.n_events;
        }
    });

    const auto n = static_cast<double>(replications);
    const double mean = std::accumulate(totals.begin(), totals.end(), 0.0) / n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double x : totals) {
        const double d2 = (x - mean) * (x - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    const double variance = m2 / (n - 1.0);
    m4 /= n;
    check.sample = {mean, variance};
    check.stderr_mean = std::sqrt(variance / n);
    check.stderr_variance = std::sqrt(std::max(0.0, m4 - (m2 / n) * (m2 / n)) / n);
    check.mean_events =
        static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0})) / n;
    return check;
}

VariationalCoefficients variational_coefficients(double n_mean, double n_var, double s_mean,
                                                 double s_var) {
    if (!positive_finite(n_mean) || !positive_finite(s_mean)) {
        throw DomainError("variational_coefficients: means must be positive");
    }
    if (!(n_var >= 0.0) || !(s_var >= 0.0) || !std::isfinite(n_var) || !std::isfinite(s_var)) {
        throw DomainError("variational_coefficients: variances must be non-negative");
    }
    VariationalCoefficients v;
    v.v_n = std::sqrt(n_var) / n_mean;
    v.v_s = std::sqrt(s_var) / s_mean;
    const double vn2 = v.v_n * v.v_n;
    const double vs2 = v.v_s * v.v_s;
    v.v_sn = std::sqrt(vs2 * vn2 + vs2 + vn2);
    return v;
}

std::array<std::uint64_t, kLossClasses> loss_class_histogram(std::span<const double> severities,
                                                             std::span<const double> boundaries) {
    if (boundaries.size() != kLossClasses - 1) {
        throw DomainError("loss_class_histogram: expected 6 class boundaries");
    }
    for (std::size_t i = 1; i < boundaries.size(); ++i) {
        if (!(boundaries[i] > boundaries[i - 1])) {
            throw DomainError("loss_class_histogram: boundaries must be strictly ascending");
        }
    }
    std::array<std::uint64_t, kLossClasses> counts{};
    for (double s : severities) {
        // first boundary >= s; values on a boundary belong to the lower class
        const auto idx = std::lower_bound(boundaries.begin(), boundaries.end(), s) - boundaries.begin();
        ++counts[static_cast<std::size_t>(idx)];
    }
    return counts;
}

// --- Error rates -----------------------------------------------------------------

std::string procedure_id(const Procedure& procedure) {
    return std::visit(Overloaded{
                          [](const RateRatioProcedure&) { return std::string("rate-ratio"); },
                          [](const AndrasikTableProcedure&) { return std::string("andrasik-table"); },
                      },
                      procedure);
}

void ErrorRateStudy::validate() const {
    for (double r : {rate_ref, rate_target_null, rate_target_alt}) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("error-rate study: rates must be non-negative");
    }
    if (!positive_finite(exposure_ref) || !positive_finite(exposure_target)) {
        throw DomainError("error-rate study: exposures must be positive");
    }
    if (replications < 1) throw DomainError("error-rate study: replications must be positive");
    if (decision_counted == Category::NoDeterioration) {
        throw DomainError("error-rate study: decision_counted must be potential or probable");
    }
    std::visit(Overloaded{
                   [](const RateRatioProcedure& p) { p.thresholds.validate(); },
                   [&](const AndrasikTableProcedure& p) {
                       p.thresholds.validate();
                       if (std::abs(exposure_ref / exposure_target - 4.0) > 1e-9) {
                           throw DomainError(
                               "error-rate study: the embedded table is defined for a 4:1 "
                               "reference:target exposure ratio");
                       }
                   },
               },
               procedure);
}

Decision decide(const Procedure& procedure, std::uint64_t reference_events,
                std::uint64_t target_events, double exposure_ref, double exposure_target) {
    return std::visit(
        Overloaded{
            [&](const RateRatioProcedure& p) {
                const auto result = rate_ratio_test({reference_events, exposure_ref, {}},
                                                    {target_events, exposure_target, {}});
                return classify_p(result.p_one_sided, p.thresholds, "rate-ratio");
            },
            [&](const AndrasikTableProcedure& p) {
                const auto i = std::min<std::uint64_t>(reference_events, kAndrasikRows - 1);
                const auto j = std::min<std::uint64_t>(target_events, kAndrasikColumns - 1);
                return classify_posterior(andrasik_lookup(i, j), p.thresholds, "andrasik-table");
            },
        },
        procedure);
}

namespace {

bool clipped(const Procedure& procedure, std::uint64_t x, std::uint64_t y) {
    return std::holds_alternative<AndrasikTableProcedure>(procedure) &&
           (x >= kAndrasikRows || y >= kAndrasikColumns);
}

struct Tally {
    std::uint64_t null_hits = 0;
    std::uint64_t alt_hits = 0;
    std::uint64_t null_clipped = 0;
    std::uint64_t alt_clipped = 0;
};

double mc_stderr(double p, std::uint64_t replications) {
    return std::sqrt(p * (1.0 - p) / static_cast<double>(replications));
}

}  // namespace

ErrorRateReport estimate_error_rates(const ErrorRateStudy& study, const probkit::RandomStream& stream,
                                     unsigned workers) {
    study.validate();
    const double ref_mean = study.rate_ref * study.exposure_ref;
    const double null_mean = study.rate_target_null * study.exposure_target;
    const double alt_mean = study.rate_target_alt * study.exposure_target;

    workers = std::max(1u, workers);
    std::vector<Tally> tallies(workers);
    const std::uint64_t chunk = (study.replications + workers - 1) / workers;
    auto body = [&](unsigned w) {
        Tally& tally = tallies[w];
        const std::uint64_t begin = std::min<std::uint64_t>(study.replications, w * chunk);
        const std::uint64_t end = std::min<std::uint64_t>(study.replications, begin + chunk);
        for (std::uint64_t r = begin; r < end; ++r) {
            auto null_stream = stream.substream(2 * r);
            const auto x0 = probkit::sample_poisson(ref_mean, null_stream);
            const auto y0 = probkit::sample_poisson(null_mean, null_stream);
            auto alt_stream = stream.substream(2 * r + 1);
            const auto x1 = probkit::sample_poisson(ref_mean, alt_stream);
            const auto y1 = probkit::sample_poisson(alt_mean, alt_stream);

            const auto d0 = decide(study.procedure, x0, y0, study.exposure_ref, study.exposure_target);
            const auto d1 = decide(study.procedure, x1, y1, study.exposure_ref, study.exposure_target);
            tally.null_hits += at_least(d0.category, study.decision_counted) ? 1 : 0;
            tally.alt_hits += at_least(d1.category, study.decision_counted) ? 1 : 0;
            tally.null_clipped += clipped(study.procedure, x0, y0) ? 1 : 0;
            tally.alt_clipped += clipped(study.procedure, x1, y1) ? 1 : 0;
        }
    };
    if (workers == 1) {
        body(0);
    } else {
        std::vector<std::thread> threads;
        for (unsigned w = 0; w < workers; ++w) threads.emplace_back(body, w);
        for (auto& t : threads) t.join();
    }

    Tally total;
    for (const auto& t : tallies) {
        total.null_hits += t.null_hits;
        total.alt_hits += t.alt_hits;
        total.null_clipped += t.null_clipped;
        total.alt_clipped += t.alt_clipped;
    }
    const auto r = static_cast<double>(study.replications);
    ErrorRateReport report;
    report.procedure_id = procedure_id(study.procedure);
    report.replications = study.replications;
    report.null_hits = total.null_hits;
    report.alt_hits = total.alt_hits;
    report.alpha_hat = static_cast<double>(total.null_hits) / r;
    report.power_hat = static_cast<double>(total.alt_hits) / r;
    report.mc_stderr_alpha = mc_stderr(report.alpha_hat, study.replications);
    report.mc_stderr_power = mc_stderr(report.power_hat, study.replications);
    report.clipped_fraction_null = static_cast<double>(total.null_clipped) / r;
    report.clipped_fraction_alt = static_cast<double>(total.alt_clipped) / r;
    report.rate_target_alt = study.rate_target_alt;
    return report;
}

std::vector<ErrorRateReport> sweep_alternatives(const ErrorRateStudy& study,
                                                std::span<const double> alt_rates,
                                                const probkit::RandomStream& stream,
                                                unsigned workers) {
    std::vector<ErrorRateReport> reports;
    reports.reserve(alt_rates.size());
    for (double rate : alt_rates) {
        ErrorRateStudy candidate = study;
        candidate.rate_target_alt = rate;
        reports.push_back(estimate_error_rates(candidate, stream, workers));
    }
    return reports;
}

}  // namespace safelevel::simulate
