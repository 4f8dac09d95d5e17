#pragma once

// Assessment bundles plus their renderings for the output formats.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "safelevel/classify.hpp"
#include "safelevel/rate_ratio.hpp"

namespace safelevel::report {

inline constexpr int kSchemaVersion = 1;

enum class Format { Text, Json, Csv };
Format format_from_string(const std::string& name);

/// One reference-vs-target comparison by one method.
struct Comparison {
    std::string label;
    std::string method;  ///< "rate-ratio", "bayes" or "andrasik-table"
    std::string basis = "events";
    CountWindow reference;
    CountWindow target;
    /// Unrounded FWSI totals, when the windows were built on that basis.
    std::optional<double> reference_raw_total;
    std::optional<double> target_raw_total;
    double p0 = 0.5;
    // rate-ratio
    std::optional<double> p_one_sided;
    std::optional<double> p_two_sided;
    std::optional<double> null_ratio;
    std::optional<std::string> alternative;  ///< "greater" or "two-sided"
    // bayes
    std::optional<double> posterior_deterioration;
    std::optional<double> prior_alpha;
    std::optional<double> prior_beta;
    Decision decision;

    bool operator==(const Comparison&) const;
};

/// A p-value grid with optional per-cell markers.
struct TableSection {
    PTable table;
    bool markers = false;
    std::vector<std::vector<std::string>> marker;  ///< same shape as table.p when markers

    bool operator==(const TableSection&) const;
};

struct Bundle {
    std::string title;
    std::optional<double> fwsi_weight;
    PThresholds p_thresholds;
    PosteriorThresholds posterior_thresholds;
    std::vector<Comparison> results;
    std::optional<TableSection> table;

    bool operator==(const Bundle&) const;
};

struct TextOptions {
    char decimal_separator = '.';
};

/// Half-up rounding to `decimals`, rendered with the given separator.
std::string format_fixed(double value, int decimals, char separator = '.');

void emit_report(std::ostream& out, const Bundle& bundle, Format format, const TextOptions& text = {});
std::string emit_report(const Bundle& bundle, Format format, const TextOptions& text = {});

/// Inverse of the JSON rendering; throws DataError on schema violations.
Bundle parse_report_json(const std::string& text);

/// Builds a marked table section from a p-value grid and thresholds.
TableSection make_table_section(PTable table, bool markers, const PThresholds& thresholds);

/// Tidy long-format grid: n_ref,n_target,p_one_sided,p_display,marker.
void write_table_csv(std::ostream& out, const TableSection& section);
/// Inverse of write_table_csv; exposures are not part of the CSV and are
/// left at 1.
TableSection parse_table_csv(std::istream& in);

}  // namespace safelevel::report
