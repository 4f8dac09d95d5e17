#include "safelevel/classify.hpp"

#include <cmath>

#include "safelevel/errors.hpp"

namespace safelevel {

void PThresholds::validate() const {
    if (!(probable > 0.0 && probable < potential && potential < 1.0)) {
        throw DomainError("p thresholds must satisfy 0 < probable < potential < 1");
    }
}

void PosteriorThresholds::validate() const {
    if (!(warning > 0.0 && warning < alert && alert < 1.0)) {
        throw DomainError("posterior thresholds must satisfy 0 < warning < alert < 1");
    }
}

std::string marker_for(Category category) {
    switch (category) {
        case Category::NoDeterioration: return "";
        case Category::PotentialDeterioration: return "*";
        case Category::ProbableDeterioration: return "+";
    }
    return "";
}

Category category_from_marker(const std::string& marker) {
    if (marker.empty()) return Category::NoDeterioration;
    if (marker == "*") return Category::PotentialDeterioration;
    if (marker == "+") return Category::ProbableDeterioration;
    throw DomainError("unknown decision marker '" + marker + "'");
}

std::string to_string(Category category) {
    switch (category) {
        case Category::NoDeterioration: return "No deterioration";
        case Category::PotentialDeterioration: return "Potential deterioration";
        case Category::ProbableDeterioration: return "Probable deterioration";
    }
    return "No deterioration";
}

Category category_from_string(const std::string& name) {
    for (auto c : {Category::NoDeterioration, Category::PotentialDeterioration,
                   Category::ProbableDeterioration}) {
        if (name == to_string(c)) return c;
    }
    if (name == "none") return Category::NoDeterioration;
    if (name == "potential") return Category::PotentialDeterioration;
    if (name == "probable") return Category::ProbableDeterioration;
    throw DomainError("unknown decision category '" + name + "'");
}

bool at_least(Category category, Category floor) {
    return static_cast<int>(category) >= static_cast<int>(floor);
}

Decision make_decision(Category category, std::string source) {
    return {category, marker_for(category), std::move(source)};
}

Decision classify_p(double p, const PThresholds& thresholds, std::string source) {
    thresholds.validate();
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("classify_p: p must lie in [0, 1]");
    const bool inclusive = thresholds.boundary == Boundary::Inclusive;
    auto below = [&](double limit) { return inclusive ? p <= limit : p < limit; };
    Category category = Category::NoDeterioration;
    if (below(thresholds.probable)) {
        category = Category::ProbableDeterioration;
    } else if (below(thresholds.potential)) {
        category = Category::PotentialDeterioration;
    }
    return make_decision(category, std::move(source));
}

Decision classify_posterior(double probability, const PosteriorThresholds& thresholds,
                            std::string source) {
    thresholds.validate();
    if (!(probability >= 0.0 && probability <= 1.0)) {
        throw DomainError("classify_posterior: probability must lie in [0, 1]");
    }
    const bool inclusive = thresholds.boundary == Boundary::Inclusive;
    auto above = [&](double limit) { return inclusive ? probability >= limit : probability > limit; };
    Category category = Category::NoDeterioration;
    if (above(thresholds.alert)) {
        category = Category::ProbableDeterioration;
    } else if (above(thresholds.warning)) {
        category = Category::PotentialDeterioration;
    }
    return make_decision(category, std::move(source));
}

DisagreementReport compare_decision_tables(const DecisionMatrix& a, const DecisionMatrix& b) {
    if (a.size() != b.size()) throw DomainError("compare_decision_tables: row counts differ");
    DisagreementReport report;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) {
            throw DomainError("compare_decision_tables: column counts differ in row " +
                              std::to_string(i));
        }
        for (std::size_t j = 0; j < a[i].size(); ++j) {
            ++report.cells;
            if (a[i][j].category == b[i][j].category) {
                ++report.agreements;
            } else {
                report.disagreements.push_back({i, j, a[i][j], b[i][j]});
            }
        }
    }
    return report;
}

}  // namespace safelevel
