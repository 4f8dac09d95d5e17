#include "safelevel/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace safelevel::ingest {

// --- Dates ------------------------------------------------------------------

namespace {

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::int64_t day_number(const Date& d) {
    return std::chrono::sys_days(d).time_since_epoch().count();
}

}  // namespace

Date parse_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !all_digits(text.substr(0, 4)) ||
        !all_digits(text.substr(5, 2)) || !all_digits(text.substr(8, 2))) {
        throw DataError("invalid date '" + text + "' (expected YYYY-MM-DD)");
    }
    const Date date{std::chrono::year(std::stoi(text.substr(0, 4))),
                    std::chrono::month(static_cast<unsigned>(std::stoi(text.substr(5, 2)))),
                    std::chrono::day(static_cast<unsigned>(std::stoi(text.substr(8, 2))))};
    if (!date.ok()) throw DataError("invalid calendar date '" + text + "'");
    return date;
}

std::string format_date(const Date& date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

DateRange DateRange::parse(const std::string& text) {
    std::string first;
    std::string last;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        first = text.substr(0, dots);
        last = text.substr(dots + 2);
    } else if (const auto colon = text.find(':'); colon != std::string::npos) {
        first = text.substr(0, colon);
        last = text.substr(colon + 1);
    } else {
        throw DataError("invalid date range '" + text + "' (expected START..END)");
    }
    DateRange range{parse_date(first), parse_date(last)};
    if (range.last < range.first) throw DataError("date range '" + text + "' ends before it starts");
    return range;
}

bool DateRange::contains(const Date& d) const { return !(d < first) && !(last < d); }

std::int64_t DateRange::days() const { return day_number(last) - day_number(first) + 1; }

// --- CSV ---------------------------------------------------------------------

IngestError::IngestError(std::string source, std::vector<RowError> errors)
    : DataError([&] {
          std::ostringstream msg;
          msg << source << ": " << errors.size() << " invalid row(s)";
          for (const auto& e : errors) msg << "\n  line " << e.line << ": " << e.message;
          return msg.str();
      }()),
      errors_(std::move(errors)) {}

std::vector<CsvRow> read_csv(std::istream& in) {
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    std::size_t line = 1;
    row.line = 1;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        const bool blank = row.fields.size() == 1 && row.fields[0].empty();
        if (!blank) rows.push_back(std::move(row));
        row = CsvRow{};
        row.line = line;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started || !field.empty()) {
                    throw IngestError("csv", {{line, "unexpected quote inside unquoted field"}});
                }
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;
                ++line;
                end_row();
                break;
            case '\n':
                ++line;
                end_row();
                break;
            default:
                field += c;
        }
    }
    if (in_quotes) throw IngestError("csv", {{row.line, "unterminated quoted field"}});
    if (field_started || !field.empty() || !row.fields.empty()) end_row();
    return rows;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace {

class HeaderMap {
public:
    HeaderMap(const CsvRow& header, std::initializer_list<const char*> required, const std::string& source) {
        std::vector<RowError> errors;
        for (std::size_t i = 0; i < header.fields.size(); ++i) {
            if (!index_.emplace(header.fields[i], i).second) {
                errors.push_back({header.line, "duplicate header column '" + header.fields[i] + "'"});
            }
        }
        for (const char* name : required) {
            if (!index_.contains(name)) errors.push_back({header.line, std::string("missing column '") + name + "'"});
        }
        if (!errors.empty()) throw IngestError(source, std::move(errors));
        width_ = header.fields.size();
        header_ = header.fields;
    }

    const std::string& get(const CsvRow& row, const char* name) const { return row.fields[index_.at(name)]; }
    bool is_header(const CsvRow& row) const { return row.fields == header_; }
    std::size_t width() const { return width_; }

private:
    std::map<std::string, std::size_t> index_;
    std::vector<std::string> header_;
    std::size_t width_ = 0;
};

std::uint64_t parse_count(const std::string& text, const char* what) {
    std::uint64_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end) {
        throw DataError(std::string(what) + " must be a non-negative integer, got '" + text + "'");
    }
    return value;
}

double parse_positive(const std::string& text, const char* what) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end || !(value > 0.0) || !std::isfinite(value)) {
        throw DataError(std::string(what) + " must be a positive number, got '" + text + "'");
    }
    return value;
}

template <class Record, class RowParser>
std::vector<Record> parse_table(std::istream& in, const std::string& source,
                                std::initializer_list<const char*> columns, RowParser parse_row) {
    const auto rows = read_csv(in);
    if (rows.empty()) throw IngestError(source, {{1, "missing header"}});
    const HeaderMap header(rows.front(), columns, source);

    std::vector<Record> records;
    std::vector<RowError> errors;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (header.is_header(row)) {
            errors.push_back({row.line, "duplicate header row"});
            continue;
        }
        if (row.fields.size() != header.width()) {
            errors.push_back({row.line, "expected " + std::to_string(header.width()) + " fields, found " +
                                            std::to_string(row.fields.size())});
            continue;
        }
        try {
            records.push_back(parse_row(header, row));
        } catch (const DataError& e) {
            errors.push_back({row.line, e.what()});
        }
    }
    if (!errors.empty()) throw IngestError(source, std::move(errors));
    return records;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return in;
}

}  // namespace

std::vector<AccidentRecord> parse_accidents(std::istream& in) {
    return parse_table<AccidentRecord>(
        in, "accidents", {"date", "operator", "category", "fatalities", "serious_injuries"},
        [](const HeaderMap& h, const CsvRow& row) {
            AccidentRecord rec;
            rec.date = parse_date(h.get(row, "date"));
            rec.operator_id = h.get(row, "operator");
            if (rec.operator_id.empty()) throw DataError("operator must not be empty");
            rec.category = h.get(row, "category");
            if (rec.category.empty()) throw DataError("category must not be empty");
            rec.fatalities = parse_count(h.get(row, "fatalities"), "fatalities");
            rec.serious_injuries = parse_count(h.get(row, "serious_injuries"), "serious_injuries");
            return rec;
        });
}

std::vector<AccidentRecord> parse_accidents_file(const std::string& path) {
    auto in = open_input(path);
    try {
        return parse_accidents(in);
    } catch (const IngestError& e) {
        throw IngestError(path, e.errors());
    }
}

void write_accidents(std::ostream& out, std::span<const AccidentRecord> records) {
    out << "date,operator,category,fatalities,serious_injuries\n";
    for (const auto& r : records) {
        out << format_date(r.date) << ',' << csv_escape(r.operator_id) << ',' << csv_escape(r.category)
            << ',' << r.fatalities << ',' << r.serious_injuries << '\n';
    }
}

std::vector<ExposureRecord> parse_exposures(std::istream& in) {
    return parse_table<ExposureRecord>(
        in, "exposure", {"operator", "period_start", "period_end", "volume", "unit"},
        [](const HeaderMap& h, const CsvRow& row) {
            ExposureRecord rec;
            rec.operator_id = h.get(row, "operator");
            if (rec.operator_id.empty()) throw DataError("operator must not be empty");
            rec.period_start = parse_date(h.get(row, "period_start"));
            rec.period_end = parse_date(h.get(row, "period_end"));
            if (rec.period_end < rec.period_start) throw DataError("period_end must not precede period_start");
            rec.volume = parse_positive(h.get(row, "volume"), "volume");
            rec.unit = h.get(row, "unit");
            return rec;
        });
}

std::vector<ExposureRecord> parse_exposures_file(const std::string& path) {
    auto in = open_input(path);
    try {
        return parse_exposures(in);
    } catch (const IngestError& e) {
        throw IngestError(path, e.errors());
    }
}

void write_exposures(std::ostream& out, std::span<const ExposureRecord> records) {
    out << "operator,period_start,period_end,volume,unit\n";
    for (const auto& r : records) {
        char buf[32];
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, r.volume);
        out << csv_escape(r.operator_id) << ',' << format_date(r.period_start) << ','
            << format_date(r.period_end) << ',' << std::string(buf, ptr) << ',' << csv_escape(r.unit)
            << '\n';
    }
}

// --- Aggregation ----------------------------------------------------------------

Basis Basis::parse(const std::string& name, double fwsi_weight) {
    if (!(fwsi_weight >= 0.0) || !std::isfinite(fwsi_weight)) {
        throw DomainError("FWSI weight must be non-negative");
    }
    if (name == "events") return {Kind::Events, fwsi_weight};
    if (name == "fatalities") return {Kind::Fatalities, fwsi_weight};
    if (name == "fwsi") return {Kind::Fwsi, fwsi_weight};
    throw DomainError("unknown basis '" + name + "' (expected events, fatalities or fwsi)");
}

std::string Basis::name() const {
    switch (kind) {
        case Kind::Events: return "events";
        case Kind::Fatalities: return "fatalities";
        case Kind::Fwsi: return "fwsi";
    }
    return "events";
}

AggregateResult aggregate(std::span<const AccidentRecord> records,
                          std::span<const ExposureRecord> exposures, const DateRange& window,
                          const std::string& operator_id,
                          const std::optional<std::string>& category, const Basis& basis) {
    if (basis.kind == Basis::Kind::Fwsi && !(basis.fwsi_weight >= 0.0)) {
        throw DomainError("FWSI weight must be non-negative");
    }

    std::vector<ExposureRecord> own;
    for (const auto& e : exposures) {
        if (e.operator_id == operator_id) own.push_back(e);
    }
    if (own.empty()) throw DataError("unknown operator '" + operator_id + "': no exposure records");
    std::sort(own.begin(), own.end(),
              [](const auto& a, const auto& b) { return a.period_start < b.period_start; });
    for (std::size_t i = 1; i < own.size(); ++i) {
        if (!(own[i - 1].period_end < own[i].period_start)) {
            throw DataError("overlapping exposure records for '" + operator_id + "': " +
                            format_date(own[i - 1].period_start) + ".." + format_date(own[i - 1].period_end) +
                            " and " + format_date(own[i].period_start) + ".." + format_date(own[i].period_end));
        }
    }

    AggregateResult result;
    double exposure = 0.0;
    std::int64_t covered_until = day_number(window.first) - 1;  // last covered day so far
    const std::int64_t first = day_number(window.first);
    const std::int64_t last = day_number(window.last);
    for (const auto& e : own) {
        const std::int64_t start = day_number(e.period_start);
        const std::int64_t end = day_number(e.period_end);
        const std::int64_t lo = std::max(start, first);
        const std::int64_t hi = std::min(end, last);
        if (lo > hi) continue;
        if (lo > covered_until + 1) {
            throw DataError("exposure gap for '" + operator_id + "': no exposure record covers " +
                            format_date(Date{std::chrono::sys_days{std::chrono::days{covered_until + 1}}}) +
                            ".." + format_date(Date{std::chrono::sys_days{std::chrono::days{lo - 1}}}));
        }
        if (!result.unit.empty() && result.unit != e.unit) {
            throw DataError("mixed exposure units for '" + operator_id + "': '" + result.unit + "' and '" +
                            e.unit + "'");
        }
        result.unit = e.unit;
        exposure += e.volume * static_cast<double>(hi - lo + 1) / static_cast<double>(end - start + 1);
        covered_until = hi;
    }
    if (covered_until < last) {
        throw DataError("exposure gap for '" + operator_id + "': no exposure record covers " +
                        format_date(Date{std::chrono::sys_days{std::chrono::days{covered_until + 1}}}) +
                        ".." + format_date(window.last));
    }

    std::uint64_t integer_total = 0;
    double weighted_total = 0.0;
    for (const auto& r : records) {
        if (r.operator_id != operator_id || !window.contains(r.date)) continue;
        if (category && r.category != *category) continue;
        ++result.matching_records;
        switch (basis.kind) {
            case Basis::Kind::Events: ++integer_total; break;
            case Basis::Kind::Fatalities: integer_total += r.fatalities; break;
            case Basis::Kind::Fwsi:
                weighted_total += static_cast<double>(r.fatalities) +
                                  basis.fwsi_weight * static_cast<double>(r.serious_injuries);
                break;
        }
    }

    std::uint64_t events = integer_total;
    result.raw_total = static_cast<double>(integer_total);
    if (basis.kind == Basis::Kind::Fwsi) {
        result.raw_total = weighted_total;
        events = static_cast<std::uint64_t>(std::floor(weighted_total + 0.5 + 1e-9));
    }
    result.window = CountWindow{events, exposure,
                                operator_id + " " + format_date(window.first) + ".." + format_date(window.last)};
    return result;
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw DomainError("pearson_correlation: series lengths differ");
    if (xs.size() < 2) throw DomainError("pearson_correlation: need at least two observations");
    const auto n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson_correlation: a series has zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace safelevel::ingest
