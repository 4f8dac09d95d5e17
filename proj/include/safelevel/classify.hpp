#pragma once

// Three-tier deterioration decisions and decision-table comparison.
//
// Threshold ties fall into the more severe category: the published tables
// mark 0.099 as probable under p <= 0.1 and 0.90 as probable under
// posterior >= 0.9.

#include <cstddef>
#include <string>
#include <vector>

namespace safelevel {

enum class Category { NoDeterioration = 0, PotentialDeterioration = 1, ProbableDeterioration = 2 };

struct Decision {
    Category category = Category::NoDeterioration;
    std::string marker;  ///< "", "*" or "+"
    std::string source;  ///< method identifier
};

enum class Boundary {
    Inclusive,  ///< ties go to the more severe category
    Strict,
};

struct PThresholds {
    double probable = 0.1;
    double potential = 0.25;
    Boundary boundary = Boundary::Inclusive;

    void validate() const;
};

struct PosteriorThresholds {
    double alert = 0.9;
    double warning = 0.75;
    Boundary boundary = Boundary::Inclusive;

    void validate() const;
};

Decision classify_p(double p, const PThresholds& thresholds = {}, std::string source = "rate-ratio");
Decision classify_posterior(double probability, const PosteriorThresholds& thresholds = {},
                            std::string source = "bayes");

Decision make_decision(Category category, std::string source);
std::string marker_for(Category category);
Category category_from_marker(const std::string& marker);
std::string to_string(Category category);
Category category_from_string(const std::string& name);
/// True when `category` is at least as severe as `floor`.
bool at_least(Category category, Category floor);

using DecisionMatrix = std::vector<std::vector<Decision>>;

struct Disagreement {
    std::size_t row = 0;
    std::size_t column = 0;
    Decision a;
    Decision b;
};

struct DisagreementReport {
    std::vector<Disagreement> disagreements;
    std::size_t agreements = 0;
    std::size_t cells = 0;
};

/// Cell-by-cell category comparison; throws DomainError on shape mismatch.
DisagreementReport compare_decision_tables(const DecisionMatrix& a, const DecisionMatrix& b);

}  // namespace safelevel
