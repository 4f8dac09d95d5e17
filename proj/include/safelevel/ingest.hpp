#pragma once

// Reads accident and exposure files and aggregates them into count windows.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safelevel/errors.hpp"
#include "safelevel/rate_ratio.hpp"

namespace safelevel::ingest {

using Date = std::chrono::year_month_day;

/// Strict ISO-8601 calendar date (YYYY-MM-DD).
Date parse_date(const std::string& text);
std::string format_date(const Date& date);

/// Inclusive range of calendar days.
struct DateRange {
    Date first;
    Date last;

    /// "YYYY-MM-DD..YYYY-MM-DD" or "YYYY-MM-DD:YYYY-MM-DD".
    static DateRange parse(const std::string& text);
    bool contains(const Date& d) const;
    std::int64_t days() const;
};

struct AccidentRecord {
    Date date;
    std::string operator_id;
    std::string category;
    std::uint64_t fatalities = 0;
    std::uint64_t serious_injuries = 0;

    bool operator==(const AccidentRecord&) const = default;
};

struct ExposureRecord {
    std::string operator_id;
    Date period_start;
    Date period_end;  ///< inclusive
    double volume = 0.0;
    std::string unit;

    bool operator==(const ExposureRecord&) const = default;
};

struct RowError {
    std::size_t line = 0;
    std::string message;
};

/// Ingestion failure listing every offending row.
class IngestError : public DataError {
public:
    IngestError(std::string source, std::vector<RowError> errors);
    const std::vector<RowError>& errors() const { return errors_; }

private:
    std::vector<RowError> errors_;
};

/// RFC 4180 reader. Quoted fields may hold separators or line breaks; CRLF
/// endings are accepted. Each row carries its starting line.
struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};
std::vector<CsvRow> read_csv(std::istream& in);
/// Quotes a field only when it needs quoting.
std::string csv_escape(const std::string& field);

/// Header: date,operator,category,fatalities,serious_injuries
std::vector<AccidentRecord> parse_accidents(std::istream& in);
std::vector<AccidentRecord> parse_accidents_file(const std::string& path);
void write_accidents(std::ostream& out, std::span<const AccidentRecord> records);

/// Header: operator,period_start,period_end,volume,unit
std::vector<ExposureRecord> parse_exposures(std::istream& in);
std::vector<ExposureRecord> parse_exposures_file(const std::string& path);
void write_exposures(std::ostream& out, std::span<const ExposureRecord> records);

struct Basis {
    enum class Kind { Events, Fatalities, Fwsi };
    Kind kind = Kind::Events;
    double fwsi_weight = 0.1;

    static Basis events() { return {Kind::Events, 0.1}; }
    static Basis fatalities() { return {Kind::Fatalities, 0.1}; }
    static Basis fwsi(double weight = 0.1) { return {Kind::Fwsi, weight}; }
    static Basis parse(const std::string& name, double fwsi_weight = 0.1);
    std::string name() const;
};

struct AggregateResult {
    CountWindow window;
    /// Unrounded total; differs from window.events only for the FWSI basis,
    /// whose total is rounded half-up to feed the count-based tests.
    double raw_total = 0.0;
    std::uint64_t matching_records = 0;
    std::string unit;
};

/// Counted basis of `operator_id` inside `window`, with
/// exposure pro-rated linearly in days from the overlapping exposure
/// records. Throws DataError when the
/// exposure data cannot cover the window consistently.
AggregateResult aggregate(std::span<const AccidentRecord> records,
                          std::span<const ExposureRecord> exposures, const DateRange& window,
                          const std::string& operator_id,
                          const std::optional<std::string>& category, const Basis& basis);

/// Sample Pearson correlation coefficient.
double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

/// Fatality/serious-injury correlations reported for 3152 ERA accidents.
/// Display-only reference values; the dataset is not shipped.
struct ReferenceCorrelation {
    const char* series;
    double value;
};
inline constexpr ReferenceCorrelation kEraReferenceCorrelations[] = {
    {"Total fatalities", 0.63400074},
    {"Passenger fatalities", 0.63349783},
    {"LC User fatalities", 0.96474093},
    {"Other fatalities", 0.95331197},
};

}  // namespace safelevel::ingest
