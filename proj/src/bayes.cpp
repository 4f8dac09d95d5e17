#include "safelevel/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "andrasik_table.hpp"
#include "safelevel/errors.hpp"
#include "safelevel/probkit.hpp"

namespace safelevel {

void BetaPrior::validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0) || std::isinf(alpha) || std::isinf(beta)) {
        throw DomainError("beta prior: alpha and beta must be positive and finite");
    }
}

BayesResult posterior_deterioration_prob(const BetaPrior& prior, const CountWindow& reference,
                                         const CountWindow& target) {
    prior.validate();
    reference.validate();
    target.validate();
    BayesResult result;
    result.p0 = conditional_success_prob(reference.exposure, target.exposure);
    result.posterior_alpha = prior.alpha + static_cast<double>(target.events);
    result.posterior_beta = prior.beta + static_cast<double>(reference.events);
    result.posterior_deterioration =
        1.0 - probkit::reg_inc_beta(result.posterior_alpha, result.posterior_beta, result.p0);
    return result;
}

// --- Embedded table -----------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

AndrasikTable parse_andrasik_table(const std::string& csv) {
    AndrasikTable table;
    std::istringstream in(csv);
    std::string line;
    bool header_seen = false;
    std::size_t row = 0;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto pos = line.find("table_version=");
            if (pos != std::string::npos) table.version = std::stoi(line.substr(pos + 14));
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        const auto cells = split_commas(line);
        if (row >= kAndrasikRows || cells.size() != kAndrasikColumns + 1 ||
            cells[0] != std::to_string(row)) {
            throw DataError("andrasik table: malformed row at line " + std::to_string(line_no));
        }
        for (std::size_t j = 0; j < kAndrasikColumns; ++j) {
            std::string cell = cells[j + 1];
            std::string marker;
            if (!cell.empty() && (cell.front() == '+' || cell.front() == '*')) {
                marker = cell.substr(0, 1);
                cell = cell.substr(1);
            }
            try {
                table.value[row][j] = std::stod(cell);
            } catch (const std::exception&) {
                throw DataError("andrasik table: bad value '" + cells[j + 1] + "' at line " +
                                std::to_string(line_no));
            }
            table.marker[row][j] = marker;
        }
        ++row;
    }
    if (row != kAndrasikRows) throw DataError("andrasik table: expected 6 data rows");
    return table;
}

const char* andrasik_table_csv() { return detail::kAndrasikTableCsv; }

const AndrasikTable& andrasik_table() {
    static const AndrasikTable table = parse_andrasik_table(detail::kAndrasikTableCsv);
    return table;
}

double andrasik_lookup(std::uint64_t n_ref, std::uint64_t n_target) {
    if (n_ref >= kAndrasikRows || n_target >= kAndrasikColumns) {
        throw DomainError("andrasik_lookup: index (" + std::to_string(n_ref) + ", " +
                          std::to_string(n_target) + ") outside the published 0..5 x 0..7 table");
    }
    return andrasik_table().value[n_ref][n_target];
}

// --- Calibration ------------------------------------------------------------------

namespace {

constexpr double kTableReferenceExposure = 4.0;
constexpr double kTableTargetExposure = 1.0;

double fitted_cell(const BetaPrior& prior, std::size_t i, std::size_t j) {
    return posterior_deterioration_prob(prior, {i, kTableReferenceExposure, {}},
                                        {j, kTableTargetExposure, {}})
        .posterior_deterioration;
}

struct Point {
    double log_alpha;
    double log_beta;
};

BetaPrior to_prior(const Point& p) { return {std::pow(10.0, p.log_alpha), std::pow(10.0, p.log_beta)}; }

Point clamp(Point p, const CalibrationGrid& grid) {
    p.log_alpha = std::clamp(p.log_alpha, grid.log10_min, grid.log10_max);
    p.log_beta = std::clamp(p.log_beta, grid.log10_min, grid.log10_max);
    return p;
}

// Nelder-Mead in (log10 alpha, log10 beta), constrained to the grid box.
Point refine(Point start, double step, const CalibrationGrid& grid) {
    constexpr int kMaxIterations = 400;
    constexpr double kTolerance = 1e-14;

    auto f = [&](const Point& p) { return calibration_objective(to_prior(clamp(p, grid))); };
    std::array<Point, 3> simplex{start, Point{start.log_alpha + step, start.log_beta},
                                 Point{start.log_alpha, start.log_beta + step}};
    for (auto& p : simplex) p = clamp(p, grid);
    std::array<double, 3> value{f(simplex[0]), f(simplex[1]), f(simplex[2])};

    for (int it = 0; it < kMaxIterations; ++it) {
        std::array<int, 3> order{0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) { return value[a] < value[b]; });
        const int best = order[0];
        const int mid = order[1];
        const int worst = order[2];
        if (value[worst] - value[best] < kTolerance) break;

        const Point centroid{(simplex[best].log_alpha + simplex[mid].log_alpha) / 2.0,
                             (simplex[best].log_beta + simplex[mid].log_beta) / 2.0};
        auto along = [&](double t) {
            return clamp(Point{centroid.log_alpha + t * (simplex[worst].log_alpha - centroid.log_alpha),
                               centroid.log_beta + t * (simplex[worst].log_beta - centroid.log_beta)},
                         grid);
        };

        const Point reflected = along(-1.0);
        const double fr = f(reflected);
        if (fr < value[best]) {
            const Point expanded = along(-2.0);
            const double fe = f(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                value[worst] = fe;
            } else {
                simplex[worst] = reflected;
                value[worst] = fr;
            }
            continue;
        }
        if (fr < value[mid]) {
            simplex[worst] = reflected;
            value[worst] = fr;
            continue;
        }
        const Point contracted = fr < value[worst] ? along(-0.5) : along(0.5);
        const double fc = f(contracted);
        if (fc < std::min(fr, value[worst])) {
            simplex[worst] = contracted;
            value[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        for (int k : {mid, worst}) {
            simplex[k] = Point{(simplex[k].log_alpha + simplex[best].log_alpha) / 2.0,
                               (simplex[k].log_beta + simplex[best].log_beta) / 2.0};
            value[k] = f(simplex[k]);
        }
    }
    const auto best = std::min_element(value.begin(), value.end()) - value.begin();
    return clamp(simplex[best], grid);
}

}  // namespace

double calibration_objective(const BetaPrior& prior) {
    const auto& table = andrasik_table();
    double total = 0.0;
    for (std::size_t i = 0; i < kAndrasikRows; ++i) {
        for (std::size_t j = 0; j < kAndrasikColumns; ++j) {
            const double r = fitted_cell(prior, i, j) - table.value[i][j];
            total += r * r;
        }
    }
    return total;
}

CalibrationResult calibrate_prior(const CalibrationGrid& grid) {
    if (grid.steps < 2 || !(grid.log10_max > grid.log10_min)) {
        throw DomainError("calibrate_prior: grid needs at least two steps over a non-empty range");
    }
    const double step = (grid.log10_max - grid.log10_min) / (grid.steps - 1);

    Point best{0.0, 0.0};
    double best_value = calibration_objective(to_prior(best));
    for (int i = 0; i < grid.steps; ++i) {
        for (int j = 0; j < grid.steps; ++j) {
            const Point p{grid.log10_min + i * step, grid.log10_min + j * step};
            const double v = calibration_objective(to_prior(p));
            if (v < best_value) {
                best_value = v;
                best = p;
            }
        }
    }

    CalibrationResult result;
    result.grid_objective = best_value;
    const Point refined = refine(best, step, grid);
    const double refined_value = calibration_objective(to_prior(refined));
    result.prior = refined_value < best_value ? to_prior(refined) : to_prior(best);
    result.objective = std::min(refined_value, best_value);
    result.uniform_objective = calibration_objective({1.0, 1.0});

    const auto& table = andrasik_table();
    for (std::size_t i = 0; i < kAndrasikRows; ++i) {
        for (std::size_t j = 0; j < kAndrasikColumns; ++j) {
            result.residual[i][j] = fitted_cell(result.prior, i, j) - table.value[i][j];
        }
    }
    return result;
}

// --- Severity-product model ---------------------------------------------------

double severity_product_likelihood(const SeverityCounts& counts, double p_fatal, double p_serious) {
    if (!(p_fatal >= 0.0 && p_fatal <= 1.0) || !(p_serious >= 0.0 && p_serious <= 1.0)) {
        throw DomainError("severity_product_likelihood: probabilities must lie in [0, 1]");
    }
    const double fatal = probkit::binom_pmf(counts.fatal_target,
                                            counts.fatal_target + counts.fatal_ref, p_fatal);
    const double serious = probkit::binom_pmf(counts.serious_target,
                                              counts.serious_target + counts.serious_ref, p_serious);
    if (fatal == 0.0 || serious == 0.0) return 0.0;
    return std::exp(std::log(fatal) + std::log(serious));
}

SeverityPosteriors severity_posteriors(const BetaPrior& prior_fatal, const BetaPrior& prior_serious,
                                       const SeverityCounts& counts, double reference_exposure,
                                       double target_exposure) {
    const CountWindow fatal_ref{counts.fatal_ref, reference_exposure, "fatal reference"};
    const CountWindow fatal_target{counts.fatal_target, target_exposure, "fatal target"};
    const CountWindow serious_ref{counts.serious_ref, reference_exposure, "serious reference"};
    const CountWindow serious_target{counts.serious_target, target_exposure, "serious target"};
    return {posterior_deterioration_prob(prior_fatal, fatal_ref, fatal_target).posterior_deterioration,
            posterior_deterioration_prob(prior_serious, serious_ref, serious_target)
                .posterior_deterioration};
}

std::vector<ComparatorCell> comparator_study(const BetaPrior& prior, std::uint64_t max_total,
                                             double reference_exposure, double target_exposure) {
    std::vector<ComparatorCell> cells;
    for (std::uint64_t x = 0; x <= max_total; ++x) {
        for (std::uint64_t y = 0; x + y <= max_total; ++y) {
            const CountWindow ref{x, reference_exposure, {}};
            const CountWindow target{y, target_exposure, {}};
            ComparatorCell cell{x, y, 0.0, 0.0};
            cell.bayes_p = 1.0 - posterior_deterioration_prob(prior, ref, target).posterior_deterioration;
            cell.exact_p = rate_ratio_test(ref, target).p_one_sided;
            cells.push_back(cell);
        }
    }
    return cells;
}

}  // namespace safelevel
