#include "safelevel/report.hpp"

#include <charconv>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "safelevel/errors.hpp"
#include "safelevel/ingest.hpp"

namespace safelevel::report {

using nlohmann::json;

Format format_from_string(const std::string& name) {
    if (name == "text") return Format::Text;
    if (name == "json") return Format::Json;
    if (name == "csv") return Format::Csv;
    throw DomainError("unknown format '" + name + "' (expected text, json or csv)");
}

bool Comparison::operator==(const Comparison& o) const {
    auto window_eq = [](const CountWindow& a, const CountWindow& b) {
        return a.events == b.events && a.exposure == b.exposure && a.label == b.label;
    };
    return label == o.label && method == o.method && basis == o.basis &&
           window_eq(reference, o.reference) && window_eq(target, o.target) &&
           reference_raw_total == o.reference_raw_total && target_raw_total == o.target_raw_total &&
           p0 == o.p0 && p_one_sided == o.p_one_sided && p_two_sided == o.p_two_sided &&
           null_ratio == o.null_ratio && alternative == o.alternative &&
           posterior_deterioration == o.posterior_deterioration && prior_alpha == o.prior_alpha &&
           prior_beta == o.prior_beta && decision.category == o.decision.category &&
           decision.marker == o.decision.marker && decision.source == o.decision.source;
}

bool TableSection::operator==(const TableSection& o) const {
    return table.max_ref == o.table.max_ref && table.max_target == o.table.max_target &&
           table.reference_exposure == o.table.reference_exposure &&
           table.target_exposure == o.table.target_exposure && table.p == o.table.p &&
           markers == o.markers && marker == o.marker;
}

bool Bundle::operator==(const Bundle& o) const {
    return title == o.title && fwsi_weight == o.fwsi_weight &&
           p_thresholds.probable == o.p_thresholds.probable &&
           p_thresholds.potential == o.p_thresholds.potential &&
           p_thresholds.boundary == o.p_thresholds.boundary &&
           posterior_thresholds.alert == o.posterior_thresholds.alert &&
           posterior_thresholds.warning == o.posterior_thresholds.warning &&
           posterior_thresholds.boundary == o.posterior_thresholds.boundary && results == o.results &&
           table == o.table;
}

std::string format_fixed(double value, int decimals, char separator) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, round_half_up(value, decimals));
    std::string out = buf;
    if (separator != '.') {
        for (auto& c : out) {
            if (c == '.') c = separator;
        }
    }
    return out;
}

TableSection make_table_section(PTable table, bool markers, const PThresholds& thresholds) {
    TableSection section;
    section.markers = markers;
    if (markers) {
        section.marker.resize(table.p.size());
        for (std::size_t i = 0; i < table.p.size(); ++i) {
            for (double p : table.p[i]) section.marker[i].push_back(classify_p(p, thresholds).marker);
        }
    }
    section.table = std::move(table);
    return section;
}

// --- Text ------------------------------------------------------------------------

namespace {

std::string shortest(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string boundary_name(Boundary b) { return b == Boundary::Inclusive ? "inclusive" : "strict"; }

Boundary boundary_from(const std::string& name) {
    if (name == "inclusive") return Boundary::Inclusive;
    if (name == "strict") return Boundary::Strict;
    throw DataError("unknown threshold boundary '" + name + "'");
}

std::string marked_cell(const std::string& marker, double value, char sep) {
    const std::string prefix = marker.empty() ? "  " : marker + " ";
    return prefix + format_fixed(value, 3, sep);
}

void emit_table_text(std::ostream& out, const TableSection& section, char sep) {
    const auto& t = section.table;
    out << "p-levels of the rate-ratio test (reference exposure " << shortest(t.reference_exposure)
        << ", target exposure " << shortest(t.target_exposure) << ")\n";
    out << std::left << std::setw(8) << "ref\\tgt";
    for (std::uint64_t j = 0; j <= t.max_target; ++j) out << std::right << std::setw(9) << j;
    out << '\n';
    for (std::uint64_t i = 0; i <= t.max_ref; ++i) {
        out << std::left << std::setw(8) << i;
        for (std::uint64_t j = 0; j <= t.max_target; ++j) {
            const std::string marker = section.markers ? section.marker[i][j] : "";
            out << std::right << std::setw(9) << marked_cell(marker, t.p[i][j], sep);
        }
        out << '\n';
    }
}

void emit_comparison_text(std::ostream& out, const Comparison& c, char sep) {
    out << (c.label.empty() ? std::string("comparison") : c.label) << "  [" << c.method << ", basis "
        << c.basis << "]\n";
    auto window = [&](const char* name, const CountWindow& w, const std::optional<double>& raw) {
        out << "  " << name << w.events << " events over exposure " << shortest(w.exposure);
        if (raw) out << " (unrounded total " << format_fixed(*raw, 3, sep) << ")";
        if (!w.label.empty()) out << "  " << w.label;
        out << '\n';
    };
    window("reference: ", c.reference, c.reference_raw_total);
    window("target:    ", c.target, c.target_raw_total);
    out << "  p0 = " << format_fixed(c.p0, 3, sep);
    if (c.null_ratio) out << "  null ratio = " << shortest(*c.null_ratio);
    out << '\n';
    if (c.p_one_sided) out << "  p (one-sided) = " << format_fixed(*c.p_one_sided, 3, sep) << '\n';
    if (c.p_two_sided) out << "  p (two-sided) = " << format_fixed(*c.p_two_sided, 3, sep) << '\n';
    if (c.prior_alpha && c.prior_beta) {
        out << "  prior Beta(" << shortest(*c.prior_alpha) << ", " << shortest(*c.prior_beta) << ")\n";
    }
    if (c.posterior_deterioration) {
        out << "  P(deterioration) = " << format_fixed(*c.posterior_deterioration, 3, sep) << '\n';
    }
    out << "  decision: " << (c.decision.marker.empty() ? "" : c.decision.marker + " ")
        << to_string(c.decision.category) << '\n';
}

void emit_text(std::ostream& out, const Bundle& b, const TextOptions& opts) {
    const char sep = opts.decimal_separator;
    if (!b.title.empty()) out << b.title << "\n\n";
    const char* cmp = b.p_thresholds.boundary == Boundary::Inclusive ? "<=" : "<";
    const char* pcmp = b.posterior_thresholds.boundary == Boundary::Inclusive ? ">=" : ">";
    out << "thresholds: p " << cmp << ' ' << format_fixed(b.p_thresholds.probable, 3, sep)
        << " probable (+), p " << cmp << ' ' << format_fixed(b.p_thresholds.potential, 3, sep)
        << " potential (*); posterior " << pcmp << ' '
        << format_fixed(b.posterior_thresholds.alert, 3, sep) << " probable (+), posterior " << pcmp
        << ' ' << format_fixed(b.posterior_thresholds.warning, 3, sep) << " potential (*)\n";
    if (b.fwsi_weight) out << "FWSI weight: " << shortest(*b.fwsi_weight) << '\n';
    if (b.table) {
        out << '\n';
        emit_table_text(out, *b.table, sep);
    }
    for (const auto& c : b.results) {
        out << '\n';
        emit_comparison_text(out, c, sep);
    }
}

// --- JSON ------------------------------------------------------------------------

json window_json(const CountWindow& w, const std::optional<double>& raw) {
    json j{{"events", w.events}, {"exposure", w.exposure}, {"label", w.label}};
    if (raw) j["raw_total"] = *raw;
    return j;
}

json comparison_json(const Comparison& c) {
    json j{{"label", c.label},
           {"method", c.method},
           {"basis", c.basis},
           {"reference", window_json(c.reference, c.reference_raw_total)},
           {"target", window_json(c.target, c.target_raw_total)},
           {"p0", c.p0},
           {"decision",
            {{"category", to_string(c.decision.category)},
             {"marker", c.decision.marker},
             {"source", c.decision.source}}}};
    if (c.p_one_sided) j["p_one_sided"] = *c.p_one_sided;
    if (c.p_two_sided) j["p_two_sided"] = *c.p_two_sided;
    if (c.null_ratio) j["null_ratio"] = *c.null_ratio;
    if (c.alternative) j["alternative"] = *c.alternative;
    if (c.posterior_deterioration) j["posterior_deterioration"] = *c.posterior_deterioration;
    if (c.prior_alpha && c.prior_beta) j["prior"] = {{"alpha", *c.prior_alpha}, {"beta", *c.prior_beta}};
    return j;
}

json bundle_json(const Bundle& b) {
    json j;
    j["spec_version"] = kSchemaVersion;
    j["title"] = b.title;
    j["fwsi_weight"] = b.fwsi_weight ? json(*b.fwsi_weight) : json(nullptr);
    j["thresholds"] = {{"p",
                        {{"probable", b.p_thresholds.probable},
                         {"potential", b.p_thresholds.potential},
                         {"boundary", boundary_name(b.p_thresholds.boundary)}}},
                       {"posterior",
                        {{"alert", b.posterior_thresholds.alert},
                         {"warning", b.posterior_thresholds.warning},
                         {"boundary", boundary_name(b.posterior_thresholds.boundary)}}}};
    j["results"] = json::array();
    for (const auto& c : b.results) j["results"].push_back(comparison_json(c));
    if (b.table) {
        const auto& t = b.table->table;
        j["table"] = {{"max_ref", t.max_ref},
                      {"max_target", t.max_target},
                      {"reference_exposure", t.reference_exposure},
                      {"target_exposure", t.target_exposure},
                      {"markers", b.table->markers},
                      {"p", t.p},
                      {"marker", b.table->marker}};
    } else {
        j["table"] = nullptr;
    }
    return j;
}

// Field access with path-qualified errors.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

    const json& at(const char* key) const {
        if (!node_.is_object() || !node_.contains(key)) throw DataError(path_ + "." + key + ": missing");
        return node_.at(key);
    }
    bool has(const char* key) const { return node_.is_object() && node_.contains(key) && !node_.at(key).is_null(); }
    Reader child(const char* key) const { return Reader(at(key), path_ + "." + key); }

    double number(const char* key) const {
        const auto& v = at(key);
        if (!v.is_number()) throw DataError(path_ + "." + key + ": expected number");
        return v.get<double>();
    }
    std::uint64_t count(const char* key) const {
        const auto& v = at(key);
        if (!v.is_number_unsigned()) throw DataError(path_ + "." + key + ": expected non-negative integer");
        return v.get<std::uint64_t>();
    }
    std::string text(const char* key) const {
        const auto& v = at(key);
        if (!v.is_string()) throw DataError(path_ + "." + key + ": expected string");
        return v.get<std::string>();
    }
    std::optional<double> opt_number(const char* key) const {
        return has(key) ? std::optional<double>(number(key)) : std::nullopt;
    }
    const std::string& path() const { return path_; }
    const json& node() const { return node_; }

private:
    const json& node_;
    std::string path_;
};

CountWindow window_from(const Reader& r, std::optional<double>& raw) {
    CountWindow w{r.count("events"), r.number("exposure"), r.text("label")};
    raw = r.opt_number("raw_total");
    return w;
}

Comparison comparison_from(const Reader& r) {
    Comparison c;
    c.label = r.text("label");
    c.method = r.text("method");
    c.basis = r.text("basis");
    c.reference = window_from(r.child("reference"), c.reference_raw_total);
    c.target = window_from(r.child("target"), c.target_raw_total);
    c.p0 = r.number("p0");
    c.p_one_sided = r.opt_number("p_one_sided");
    c.p_two_sided = r.opt_number("p_two_sided");
    c.null_ratio = r.opt_number("null_ratio");
    if (r.has("alternative")) c.alternative = r.text("alternative");
    c.posterior_deterioration = r.opt_number("posterior_deterioration");
    if (r.has("prior")) {
        const auto prior = r.child("prior");
        c.prior_alpha = prior.number("alpha");
        c.prior_beta = prior.number("beta");
    }
    const auto d = r.child("decision");
    try {
        c.decision.category = category_from_string(d.text("category"));
    } catch (const DomainError& e) {
        throw DataError(d.path() + ".category: " + e.what());
    }
    c.decision.marker = d.text("marker");
    c.decision.source = d.text("source");
    return c;
}

// --- CSV ---------------------------------------------------------------------------

void emit_csv(std::ostream& out, const Bundle& b) {
    out << "label,method,basis,reference_events,reference_exposure,reference_raw_total,"
           "target_events,target_exposure,target_raw_total,p0,p_one_sided,p_two_sided,"
           "posterior_deterioration,decision,marker\n";
    auto opt = [](const std::optional<double>& v) { return v ? shortest(*v) : std::string(); };
    for (const auto& c : b.results) {
        out << ingest::csv_escape(c.label) << ',' << c.method << ',' << c.basis << ','
            << c.reference.events << ',' << shortest(c.reference.exposure) << ','
            << opt(c.reference_raw_total) << ',' << c.target.events << ','
            << shortest(c.target.exposure) << ',' << opt(c.target_raw_total) << ',' << shortest(c.p0)
            << ',' << opt(c.p_one_sided) << ',' << opt(c.p_two_sided) << ','
            << opt(c.posterior_deterioration) << ',' << to_string(c.decision.category) << ','
            << c.decision.marker << '\n';
    }
}

}  // namespace

void emit_report(std::ostream& out, const Bundle& bundle, Format format, const TextOptions& text) {
    switch (format) {
        case Format::Text: emit_text(out, bundle, text); break;
        case Format::Json: out << bundle_json(bundle).dump(2) << '\n'; break;
        case Format::Csv: emit_csv(out, bundle); break;
    }
}

std::string emit_report(const Bundle& bundle, Format format, const TextOptions& text) {
    std::ostringstream out;
    emit_report(out, bundle, format, text);
    return out.str();
}

Bundle parse_report_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("report json: ") + e.what());
    }
    const Reader root(doc, "$");
    if (root.count("spec_version") != static_cast<std::uint64_t>(kSchemaVersion)) {
        throw DataError("$.spec_version: unsupported version");
    }
    Bundle b;
    b.title = root.text("title");
    b.fwsi_weight = root.opt_number("fwsi_weight");
    const auto thresholds = root.child("thresholds");
    const auto p = thresholds.child("p");
    b.p_thresholds = {p.number("probable"), p.number("potential"), boundary_from(p.text("boundary"))};
    const auto post = thresholds.child("posterior");
    b.posterior_thresholds = {post.number("alert"), post.number("warning"),
                              boundary_from(post.text("boundary"))};

    const auto& results = root.at("results");
    if (!results.is_array()) throw DataError("$.results: expected array");
    for (std::size_t i = 0; i < results.size(); ++i) {
        b.results.push_back(comparison_from(Reader(results[i], "$.results[" + std::to_string(i) + "]")));
    }

    if (root.has("table")) {
        const auto t = root.child("table");
        TableSection section;
        section.table.max_ref = t.count("max_ref");
        section.table.max_target = t.count("max_target");
        section.table.reference_exposure = t.number("reference_exposure");
        section.table.target_exposure = t.number("target_exposure");
        section.markers = t.at("markers").get<bool>();
        try {
            section.table.p = t.at("p").get<std::vector<std::vector<double>>>();
            section.marker = t.at("marker").get<std::vector<std::vector<std::string>>>();
        } catch (const json::exception& e) {
            throw DataError(t.path() + ": " + e.what());
        }
        b.table = std::move(section);
    }
    return b;
}

void write_table_csv(std::ostream& out, const TableSection& section) {
    out << "n_ref,n_target,p_one_sided,p_display,marker\n";
    const auto& t = section.table;
    for (std::uint64_t i = 0; i <= t.max_ref; ++i) {
        for (std::uint64_t j = 0; j <= t.max_target; ++j) {
            out << i << ',' << j << ',' << shortest(t.p[i][j]) << ',' << format_fixed(t.p[i][j], 3)
                << ',' << (section.markers ? section.marker[i][j] : std::string()) << '\n';
        }
    }
}

TableSection parse_table_csv(std::istream& in) {
    const auto rows = ingest::read_csv(in);
    if (rows.empty() || rows[0].fields !=
                            std::vector<std::string>{"n_ref", "n_target", "p_one_sided", "p_display", "marker"}) {
        throw DataError("table csv: unexpected header");
    }
    TableSection section;
    auto& t = section.table;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        if (f.size() != 5) throw DataError("table csv: line " + std::to_string(rows[r].line) + ": expected 5 fields");
        const auto i = std::stoull(f[0]);
        const auto j = std::stoull(f[1]);
        double p = 0.0;
        std::from_chars(f[2].data(), f[2].data() + f[2].size(), p);
        if (t.p.size() <= i) {
            t.p.resize(i + 1);
            section.marker.resize(i + 1);
        }
        if (t.p[i].size() != j) throw DataError("table csv: cells out of order at line " + std::to_string(rows[r].line));
        t.p[i].push_back(p);
        section.marker[i].push_back(f[4]);
        if (!f[4].empty()) section.markers = true;
        t.max_ref = std::max<std::uint64_t>(t.max_ref, i);
        t.max_target = std::max<std::uint64_t>(t.max_target, j);
    }
    if (!section.markers) section.marker.clear();
    return section;
}

}  // namespace safelevel::report
