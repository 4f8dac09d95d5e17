#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "safelevel/bayes.hpp"
#include "safelevel/classify.hpp"
#include "safelevel/ingest.hpp"
#include "safelevel/rate_ratio.hpp"
#include "safelevel/report.hpp"
#include "safelevel/simulate.hpp"
#include "safelevel/study_config.hpp"

namespace safelevel::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 1;
constexpr double kMomentBound = 5.0;  // Monte-Carlo standard errors

std::pair<double, double> parse_pair(const std::string& text, const char* flag) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw CLI::ValidationError(flag, "expected two comma-separated numbers");
    try {
        std::size_t used_a = 0;
        std::size_t used_b = 0;
        const std::string a = text.substr(0, comma);
        const std::string b = text.substr(comma + 1);
        const double first = std::stod(a, &used_a);
        const double second = std::stod(b, &used_b);
        if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument(text);
        return {first, second};
    } catch (const std::logic_error&) {
        throw CLI::ValidationError(flag, "expected two comma-separated numbers, got '" + text + "'");
    }
}

PThresholds p_thresholds_from(const std::string& text) {
    const auto [probable, potential] = parse_pair(text, "--thresholds");
    PThresholds t{probable, potential};
    t.validate();
    return t;
}

PosteriorThresholds posterior_thresholds_from(const std::string& text, const char* flag) {
    const auto [alert, warning] = parse_pair(text, flag);
    PosteriorThresholds t{alert, warning};
    t.validate();
    return t;
}

int gate_code(Category category) {
    switch (category) {
        case Category::NoDeterioration: return kExitOk;
        case Category::PotentialDeterioration: return kExitPotential;
        case Category::ProbableDeterioration: return kExitProbable;
    }
    return kExitOk;
}

Category worst(const std::vector<report::Comparison>& results) {
    Category c = Category::NoDeterioration;
    for (const auto& r : results) {
        if (at_least(r.decision.category, c)) c = r.decision.category;
    }
    return c;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const std::optional<std::uint64_t>& config) {
    if (flag) return *flag;
    if (config) return *config;
    if (const char* env = std::getenv("SAFELEVEL_SEED"); env != nullptr && *env != '\0') {
        try {
            std::size_t used = 0;
            const auto seed = std::stoull(env, &used);
            if (used == std::string(env).size()) return seed;
        } catch (const std::logic_error&) {
        }
        throw DataError(std::string("SAFELEVEL_SEED is not an unsigned integer: '") + env + "'");
    }
    return kDefaultSeed;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << content;
}

fs::path prepare_out_dir(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + out + "': " + ec.message());
    return dir;
}

std::string shortest(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// --- Options shared by several subcommands --------------------------------------

struct WindowFlags {
    std::optional<std::uint64_t> ref_events;
    std::optional<double> ref_exposure;
    std::optional<std::uint64_t> target_events;
    std::optional<double> target_exposure;

    void add(CLI::App* app) {
        app->add_option("--ref-events", ref_events, "Events in the reference window");
        app->add_option("--ref-exposure", ref_exposure, "Exposure of the reference window");
        app->add_option("--target-events", target_events, "Events in the target window");
        app->add_option("--target-exposure", target_exposure, "Exposure of the target window");
    }

    bool any() const { return ref_events || ref_exposure || target_events || target_exposure; }

    std::pair<CountWindow, CountWindow> windows() const {
        if (!ref_events || !ref_exposure || !target_events || !target_exposure) {
            throw CLI::ValidationError("window flags",
                                       "--ref-events, --ref-exposure, --target-events and --target-exposure are required");
        }
        CountWindow ref{*ref_events, *ref_exposure, "reference"};
        CountWindow target{*target_events, *target_exposure, "target"};
        ref.validate();
        target.validate();
        return {ref, target};
    }
};

struct OutputFlags {
    std::string format = "text";
    bool locale_decimal = false;

    void add(CLI::App* app) {
        app->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json", "csv"}));
        app->add_flag("--locale-decimal", locale_decimal, "Render text decimals with a comma");
    }
    report::TextOptions text() const { return {locale_decimal ? ',' : '.'}; }
    report::Format parsed() const { return report::format_from_string(format); }
};

report::Comparison rate_ratio_comparison(const CountWindow& ref, const CountWindow& target, double null_ratio,
                                         const std::string& alternative, TwoSidedMethod method,
                                         const PThresholds& thresholds) {
    const auto result = rate_ratio_test(ref, target, null_ratio, method);
    report::Comparison c;
    c.method = "rate-ratio";
    c.reference = ref;
    c.target = target;
    c.p0 = result.p0;
    c.p_one_sided = result.p_one_sided;
    c.p_two_sided = result.p_two_sided;
    c.null_ratio = null_ratio;
    c.alternative = alternative;
    const double p = alternative == "two-sided" ? result.p_two_sided : result.p_one_sided;
    c.decision = classify_p(p, thresholds, "rate-ratio");
    return c;
}

report::Comparison bayes_comparison(const BetaPrior& prior, const CountWindow& ref, const CountWindow& target,
                                    const PosteriorThresholds& thresholds) {
    const auto result = posterior_deterioration_prob(prior, ref, target);
    report::Comparison c;
    c.method = "bayes";
    c.reference = ref;
    c.target = target;
    c.p0 = result.p0;
    c.posterior_deterioration = result.posterior_deterioration;
    c.prior_alpha = prior.alpha;
    c.prior_beta = prior.beta;
    c.decision = classify_posterior(result.posterior_deterioration, thresholds, "bayes");
    return c;
}

// --- test ----------------------------------------------------------------------

struct TestCommand {
    WindowFlags windows;
    OutputFlags output;
    double null_ratio = 1.0;
    std::string alternative = "greater";
    std::string two_sided_method = "central";
    std::string thresholds = "0.1,0.25";
    std::string label;
    bool gate = false;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("test", "Exact rate-ratio test of a target window against a reference window");
        windows.add(app);
        output.add(app);
        app->add_option("--null-ratio", null_ratio, "Rate ratio under the null hypothesis");
        app->add_option("--alternative", alternative, "Which p-value drives the decision")
            ->check(CLI::IsMember({"greater", "two-sided"}));
        app->add_option("--two-sided-method", two_sided_method, "Two-sided p-value rule")
            ->check(CLI::IsMember({"central", "minlike"}));
        app->add_option("--thresholds", thresholds, "Probable and potential p thresholds, e.g. 0.1,0.25");
        app->add_option("--label", label, "Label for the comparison");
        app->add_flag("--gate", gate, "Exit 3 on potential, 4 on probable deterioration");
        app_ = app;
    }

    int run(std::ostream& out) const {
        const auto [ref, target] = windows.windows();
        const auto t = p_thresholds_from(thresholds);
        report::Bundle bundle;
        bundle.title = "Rate-ratio test";
        bundle.p_thresholds = t;
        auto c = rate_ratio_comparison(ref, target, null_ratio, alternative,
                                       two_sided_method_from_string(two_sided_method), t);
        c.label = label;
        bundle.results.push_back(c);
        report::emit_report(out, bundle, output.parsed(), output.text());
        return gate ? gate_code(c.decision.category) : kExitOk;
    }

    CLI::App* app_ = nullptr;
};

// --- table -----------------------------------------------------------------------

struct TableCommand {
    OutputFlags output;
    std::uint64_t max_ref = 5;
    std::uint64_t max_target = 7;
    double ref_exposure = 4.0;
    double target_exposure = 1.0;
    bool markers = false;
    std::string thresholds = "0.1,0.25";

    void add(CLI::App& root) {
        app_ = root.add_subcommand("table", "Matrix of one-sided rate-ratio p-values");
        output.add(app_);
        app_->add_option("--max-ref", max_ref, "Largest reference count");
        app_->add_option("--max-target", max_target, "Largest target count");
        app_->add_option("--ref-exposure", ref_exposure, "Reference exposure");
        app_->add_option("--target-exposure", target_exposure, "Target exposure");
        app_->add_flag("--markers", markers, "Mark probable (+) and potential (*) cells");
        app_->add_option("--thresholds", thresholds, "Probable and potential p thresholds");
    }

    int run(std::ostream& out) const {
        const auto t = p_thresholds_from(thresholds);
        auto section = report::make_table_section(generate_p_table(max_ref, max_target, ref_exposure, target_exposure),
                                                  markers, t);
        if (output.format == "csv") {
            report::write_table_csv(out, section);
            return kExitOk;
        }
        report::Bundle bundle;
        bundle.title = "Rate-ratio p-level table";
        bundle.p_thresholds = t;
        bundle.table = std::move(section);
        report::emit_report(out, bundle, output.parsed(), output.text());
        return kExitOk;
    }

    CLI::App* app_ = nullptr;
};

// --- bayes -----------------------------------------------------------------------

json calibration_json(const CalibrationResult& c) {
    json residuals = json::array();
    for (const auto& row : c.residual) residuals.push_back(std::vector<double>(row.begin(), row.end()));
    return {{"spec_version", report::kSchemaVersion},
            {"kind", "calibration"},
            {"prior", {{"alpha", c.prior.alpha}, {"beta", c.prior.beta}}},
            {"objective", c.objective},
            {"grid_objective", c.grid_objective},
            {"uniform_objective", c.uniform_objective},
            {"residual", residuals}};
}

struct BayesCommand {
    WindowFlags windows;
    OutputFlags output;
    double prior_alpha = 1.0;
    double prior_beta = 1.0;
    std::vector<std::uint64_t> lookup;
    bool calibrate = false;
    std::string thresholds = "0.9,0.75";
    bool gate = false;

    void add(CLI::App& root) {
        app_ = root.add_subcommand("bayes", "Beta-binomial deterioration probability or embedded-table lookup");
        windows.add(app_);
        output.add(app_);
        app_->add_option("--prior-alpha", prior_alpha, "Beta prior alpha (target share)");
        app_->add_option("--prior-beta", prior_beta, "Beta prior beta");
        app_->add_option("--lookup", lookup, "Embedded table value for N_REF N_TARGET")->expected(2);
        app_->add_flag("--calibrate", calibrate, "Fit a Beta prior to the embedded table");
        app_->add_option("--thresholds", thresholds, "Alert and warning posterior thresholds, e.g. 0.9,0.75");
        app_->add_flag("--gate", gate, "Exit 3 on potential, 4 on probable deterioration");
    }

    int run(std::ostream& out) const {
        const auto t = posterior_thresholds_from(thresholds, "--thresholds");
        if (calibrate) return run_calibration(out);

        report::Bundle bundle;
        bundle.posterior_thresholds = t;
        if (!lookup.empty()) {
            if (windows.any()) throw CLI::ValidationError("--lookup", "cannot be combined with window flags");
            const double value = andrasik_lookup(lookup[0], lookup[1]);
            report::Comparison c;
            c.method = "andrasik-table";
            c.reference = {lookup[0], 4.0, "reference (4 years)"};
            c.target = {lookup[1], 1.0, "target (1 year)"};
            c.p0 = conditional_success_prob(4.0, 1.0);
            c.posterior_deterioration = value;
            c.decision = classify_posterior(value, t, "andrasik-table");
            bundle.title = "Embedded BAV decision table";
            bundle.results.push_back(c);
        } else {
            const auto [ref, target] = windows.windows();
            bundle.title = "Beta-binomial deterioration probability";
            bundle.results.push_back(bayes_comparison({prior_alpha, prior_beta}, ref, target, t));
        }
        report::emit_report(out, bundle, output.parsed(), output.text());
        return gate ? gate_code(bundle.results.front().decision.category) : kExitOk;
    }

    int run_calibration(std::ostream& out) const {
        const auto c = calibrate_prior();
        if (output.format == "json") {
            out << calibration_json(c).dump(2) << '\n';
            return kExitOk;
        }
        if (output.format == "csv") {
            out << "n_ref,n_target,published,fitted,residual\n";
            const auto& table = andrasik_table();
            for (std::size_t i = 0; i < kAndrasikRows; ++i) {
                for (std::size_t j = 0; j < kAndrasikColumns; ++j) {
                    out << i << ',' << j << ',' << shortest(table.value[i][j]) << ','
                        << shortest(table.value[i][j] + c.residual[i][j]) << ',' << shortest(c.residual[i][j]) << '\n';
                }
            }
            return kExitOk;
        }
        const char sep = output.text().decimal_separator;
        out << "Calibrated prior: Beta(" << shortest(c.prior.alpha) << ", " << shortest(c.prior.beta) << ")\n"
            << "sum of squared residuals: " << report::format_fixed(c.objective, 6, sep)
            << " (grid " << report::format_fixed(c.grid_objective, 6, sep) << ", Beta(1,1) "
            << report::format_fixed(c.uniform_objective, 6, sep) << ")\n"
            << "residuals (fitted - published):\n";
        for (std::size_t i = 0; i < kAndrasikRows; ++i) {
            out << "  " << i << ':';
            for (std::size_t j = 0; j < kAndrasikColumns; ++j) {
                const std::string cell = report::format_fixed(c.residual[i][j], 3, sep);
                out << std::string(cell.size() < 8 ? 8 - cell.size() : 1, ' ') << cell;
            }
            out << '\n';
        }
        return kExitOk;
    }

    CLI::App* app_ = nullptr;
};

// --- compare -------------------------------------------------------------------------

struct CompareCommand {
    std::string format = "text";
    std::string thresholds = "0.1,0.25";
    std::string posterior = "0.9,0.75";

    void add(CLI::App& root) {
        app_ = root.add_subcommand("compare",
                                   "Compare rate-ratio decisions with the embedded BAV table (4:1 exposures)");
        app_->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
        app_->add_option("--thresholds", thresholds, "Probable and potential p thresholds");
        app_->add_option("--posterior-thresholds", posterior, "Alert and warning posterior thresholds");
    }

    int run(std::ostream& out) const {
        const auto pt = p_thresholds_from(thresholds);
        const auto qt = posterior_thresholds_from(posterior, "--posterior-thresholds");
        const auto table = generate_p_table(kAndrasikRows - 1, kAndrasikColumns - 1, 4.0, 1.0);
        DecisionMatrix rr(kAndrasikRows);
        DecisionMatrix bav(kAndrasikRows);
        for (std::size_t i = 0; i < kAndrasikRows; ++i) {
            for (std::size_t j = 0; j < kAndrasikColumns; ++j) {
                rr[i].push_back(classify_p(table.p[i][j], pt, "rate-ratio"));
                bav[i].push_back(classify_posterior(andrasik_lookup(i, j), qt, "andrasik-table"));
            }
        }
        const auto rep = compare_decision_tables(rr, bav);
        if (format == "json") {
            json cells = json::array();
            for (const auto& d : rep.disagreements) {
                cells.push_back({{"n_ref", d.row},
                                 {"n_target", d.column},
                                 {"rate_ratio", to_string(d.a.category)},
                                 {"andrasik", to_string(d.b.category)},
                                 {"p_one_sided", table.p[d.row][d.column]},
                                 {"andrasik_value", andrasik_lookup(d.row, d.column)}});
            }
            out << json{{"spec_version", report::kSchemaVersion},
                        {"kind", "disagreement"},
                        {"cells", rep.cells},
                        {"agreements", rep.agreements},
                        {"disagreements", cells}}
                       .dump(2)
                << '\n';
            return kExitOk;
        }
        out << "Rate-ratio vs embedded BAV table: " << rep.agreements << " of " << rep.cells
            << " cells agree\n";
        for (const auto& d : rep.disagreements) {
            out << "  (" << d.row << ", " << d.column << "): rate-ratio " << to_string(d.a.category) << " (p = "
                << report::format_fixed(table.p[d.row][d.column], 3) << "), BAV " << to_string(d.b.category)
                << " (" << report::format_fixed(andrasik_lookup(d.row, d.column), 2) << ")\n";
        }
        return kExitOk;
    }

    CLI::App* app_ = nullptr;
};

// --- simulate / power -------------------------------------------------------------

struct SimulationFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> replications;
    std::optional<unsigned> workers;
    std::string out;

    void add(CLI::App* app) {
        app->add_option("--config", config, "Study configuration (JSON)")->required();
        app->add_option("--seed", seed, "Master seed (overrides config and SAFELEVEL_SEED)");
        app->add_option("--replications", replications, "Number of replications")->check(CLI::PositiveNumber);
        app->add_option("--workers", workers, "Worker threads")->check(CLI::Range(1u, 1024u));
        app->add_option("--out", out, "Directory for JSON and CSV results");
    }
};

json moments_json(const simulate::Moments& m) { return {{"mean", m.mean}, {"variance", m.variance}}; }

struct SimulateCommand {
    SimulationFlags flags;

    void add(CLI::App& root) {
        app_ = root.add_subcommand("simulate", "Simulate the compound Poisson process and check its moments");
        flags.add(app_);
    }

    int run(std::ostream& out) const {
        const auto config = config::load_study_config(flags.config);
        if (!config.process) throw config::ConfigError("$.process", "missing required block for simulate");
        const auto& spec = *config.process;
        const std::uint64_t seed = resolve_seed(flags.seed, config.seed);
        const std::uint64_t replications = flags.replications.value_or(config.replications.value_or(100000));
        const unsigned workers = flags.workers.value_or(config.workers);
        if (replications < 2) throw config::ConfigError("$.replications", "simulate needs at least 2");

        const probkit::RandomStream stream(seed, 0);
        std::optional<simulate::Moments> theoretical;
        try {
            theoretical = simulate::theoretical_moments(spec);
        } catch (const simulate::InfiniteMomentError&) {
        }
        simulate::CompoundPoissonSpec sample_spec = spec;
        const auto check = theoretical ? simulate::check_moments(spec, replications, stream, workers)
                                       : simulate::MomentCheck{};

        json doc{{"spec_version", report::kSchemaVersion},
                 {"kind", "simulate"},
                 {"seed", seed},
                 {"replications", replications},
                 {"process", {{"rate", spec.rate}, {"exposure", spec.exposure}}}};
        std::ostringstream csv;
        csv << "statistic,theoretical,sample,stderr,z\n";
        if (theoretical) {
            const bool ok = std::abs(check.z_mean()) <= kMomentBound && std::abs(check.z_variance()) <= kMomentBound;
            doc["theoretical"] = moments_json(check.theoretical);
            doc["sample"] = moments_json(check.sample);
            doc["sample"]["mean_events"] = check.mean_events;
            doc["stderr"] = {{"mean", check.stderr_mean}, {"variance", check.stderr_variance}};
            doc["z"] = {{"mean", check.z_mean()}, {"variance", check.z_variance()}};
            doc["bound"] = kMomentBound;
            doc["within_bounds"] = ok;
            csv << "mean," << shortest(check.theoretical.mean) << ',' << shortest(check.sample.mean) << ','
                << shortest(check.stderr_mean) << ',' << shortest(check.z_mean()) << '\n'
                << "variance," << shortest(check.theoretical.variance) << ',' << shortest(check.sample.variance)
                << ',' << shortest(check.stderr_variance) << ',' << shortest(check.z_variance()) << '\n';
            out << "Compound Poisson moments (rate " << shortest(spec.rate) << ", exposure "
                << shortest(spec.exposure) << ", " << replications << " replications, seed " << seed << ")\n"
                << "  E X_t: theoretical " << shortest(check.theoretical.mean) << ", sample "
                << report::format_fixed(check.sample.mean, 4) << " +/- " << report::format_fixed(check.stderr_mean, 4)
                << " (z = " << report::format_fixed(check.z_mean(), 2) << ")\n"
                << "  V X_t: theoretical " << shortest(check.theoretical.variance) << ", sample "
                << report::format_fixed(check.sample.variance, 4) << " +/- "
                << report::format_fixed(check.stderr_variance, 4) << " (z = "
                << report::format_fixed(check.z_variance(), 2) << ")\n"
                << "  " << (ok ? "within" : "OUTSIDE") << " " << kMomentBound << " standard errors\n";
        } else {
            doc["theoretical"] = nullptr;
            out << "Severity model has no finite second moment; moment check skipped\n";
        }

        std::string loss_csv;
        if (config.loss_classes) {
            std::array<std::uint64_t, simulate::kLossClasses> counts{};
            for (std::uint64_t r = 0; r < replications; ++r) {
                auto local = stream.substream(r);
                const auto realization = simulate::simulate_process(sample_spec, local);
                const auto h = simulate::loss_class_histogram(realization.severities, *config.loss_classes);
                for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += h[k];
            }
            json classes = json::object();
            std::ostringstream lc;
            lc << "class,lower,upper,count\n";
            out << "  loss classes:";
            for (std::size_t k = 0; k < counts.size(); ++k) {
                const std::string label(1, simulate::kLossClassLabels[k]);
                classes[label] = counts[k];
                lc << label << ',' << (k == 0 ? std::string() : shortest((*config.loss_classes)[k - 1])) << ','
                   << (k + 1 == counts.size() ? std::string() : shortest((*config.loss_classes)[k])) << ','
                   << counts[k] << '\n';
                out << ' ' << label << '=' << counts[k];
            }
            out << '\n';
            doc["loss_classes"] = {{"boundaries", *config.loss_classes}, {"counts", classes}};
            loss_csv = lc.str();
        }

        if (!flags.out.empty()) {
            const auto dir = prepare_out_dir(flags.out);
            write_file(dir / "simulate.json", doc.dump(2) + "\n");
            write_file(dir / "simulate.csv", csv.str());
            if (!loss_csv.empty()) write_file(dir / "simulate_loss_classes.csv", loss_csv);
            out << "wrote " << (dir / "simulate.json").string() << '\n';
        }
        return kExitOk;
    }

    CLI::App* app_ = nullptr;
};

json procedure_json(const simulate::Procedure& p) {
    if (const auto* rr = std::get_if<simulate::RateRatioProcedure>(&p)) {
        return {{"kind", "rate-ratio"}, {"probable", rr->thresholds.probable}, {"potential", rr->thresholds.potential}};
    }
    const auto& at = std::get<simulate::AndrasikTableProcedure>(p);
    return {{"kind", "andrasik-table"}, {"alert", at.thresholds.alert}, {"warning", at.thresholds.warning}};
}

struct PowerCommand {
    SimulationFlags flags;

    void add(CLI::App& root) {
        app_ = root.add_subcommand("power", "Monte-Carlo type-I error and power of a decision procedure");
        flags.add(app_);
    }

    int run(std::ostream& out) const {
        const auto config = config::load_study_config(flags.config);
        if (!config.study) throw config::ConfigError("$.study", "missing required block for power");
        auto study = *config.study;
        const std::uint64_t seed = resolve_seed(flags.seed, config.seed);
        if (flags.replications) study.replications = *flags.replications;
        const unsigned workers = flags.workers.value_or(config.workers);

        const probkit::RandomStream stream(seed, 0);
        const auto reports = simulate::sweep_alternatives(study, config.alt_rates, stream, workers);

        json rows = json::array();
        std::ostringstream csv;
        csv << "rate_target_alt,alpha_hat,power_hat,mc_stderr_alpha,mc_stderr_power,null_hits,alt_hits,"
               "clipped_fraction_null,clipped_fraction_alt\n";
        out << "Error rates of " << simulate::procedure_id(study.procedure) << " (" << study.replications
            << " replications, seed " << seed << ", counting " << to_string(study.decision_counted)
            << " or worse)\n";
        for (const auto& r : reports) {
            rows.push_back({{"rate_target_alt", r.rate_target_alt},
                            {"alpha_hat", r.alpha_hat},
                            {"power_hat", r.power_hat},
                            {"mc_stderr_alpha", r.mc_stderr_alpha},
                            {"mc_stderr_power", r.mc_stderr_power},
                            {"null_hits", r.null_hits},
                            {"alt_hits", r.alt_hits},
                            {"clipped_fraction_null", r.clipped_fraction_null},
                            {"clipped_fraction_alt", r.clipped_fraction_alt}});
            csv << shortest(r.rate_target_alt) << ',' << shortest(r.alpha_hat) << ',' << shortest(r.power_hat) << ','
                << shortest(r.mc_stderr_alpha) << ',' << shortest(r.mc_stderr_power) << ',' << r.null_hits << ','
                << r.alt_hits << ',' << shortest(r.clipped_fraction_null) << ','
                << shortest(r.clipped_fraction_alt) << '\n';
            const double combined = std::sqrt(r.mc_stderr_alpha * r.mc_stderr_alpha + r.mc_stderr_power * r.mc_stderr_power);
            out << "  alt rate " << shortest(r.rate_target_alt) << ": alpha_hat " << report::format_fixed(r.alpha_hat, 4)
                << " +/- " << report::format_fixed(r.mc_stderr_alpha, 4) << ", power_hat "
                << report::format_fixed(r.power_hat, 4) << " +/- " << report::format_fixed(r.mc_stderr_power, 4)
                << ", |power - alpha| = " << report::format_fixed(std::abs(r.power_hat - r.alpha_hat), 4)
                << " (combined stderr " << report::format_fixed(combined, 4) << ")\n";
            if (r.clipped_fraction_null > 0.0 || r.clipped_fraction_alt > 0.0) {
                out << "    warning: counts clipped to the table range in "
                    << report::format_fixed(100.0 * r.clipped_fraction_null, 2) << "% (null) and "
                    << report::format_fixed(100.0 * r.clipped_fraction_alt, 2) << "% (alternative) of replications\n";
            }
        }

        json doc{{"spec_version", report::kSchemaVersion},
                 {"kind", "power"},
                 {"seed", seed},
                 {"replications", study.replications},
                 {"procedure", procedure_json(study.procedure)},
                 {"study",
                  {{"rate_ref", study.rate_ref},
                   {"rate_target_null", study.rate_target_null},
                   {"exposure_ref", study.exposure_ref},
                   {"exposure_target", study.exposure_target},
                   {"decision_counted", to_string(study.decision_counted)}}},
                 {"reports", rows}};
        if (!flags.out.empty()) {
            const auto dir = prepare_out_dir(flags.out);
            write_file(dir / "power.json", doc.dump(2) + "\n");
            write_file(dir / "power.csv", csv.str());
            out << "wrote " << (dir / "power.json").string() << '\n';
        }
        return kExitOk;
    }

    CLI::App* app_ = nullptr;
};

// --- assess ------------------------------------------------------------------------

struct AssessCommand {
    OutputFlags output;
    std::string accidents;
    std::string exposure;
    std::string operator_id;
    std::optional<std::string> category;
    std::string reference;
    std::string target;
    std::string basis = "events";
    double fwsi_weight = 0.1;
    std::string method = "rate-ratio";
    double prior_alpha = 1.0;
    double prior_beta = 1.0;
    std::string thresholds = "0.1,0.25";
    std::string posterior = "0.9,0.75";
    bool gate = false;

    void add(CLI::App& root) {
        app_ = root.add_subcommand("assess", "Ingest accident and exposure files and assess deterioration");
        output.add(app_);
        app_->add_option("--accidents", accidents, "accidents.csv")->required();
        app_->add_option("--exposure", exposure, "exposure.csv")->required();
        app_->add_option("--operator", operator_id, "Operator identifier")->required();
        app_->add_option("--category", category, "Restrict to one accident category");
        app_->add_option("--reference", reference, "Reference period START..END")->required();
        app_->add_option("--target", target, "Target period START..END")->required();
        app_->add_option("--basis", basis, "Counting basis")->check(CLI::IsMember({"events", "fatalities", "fwsi"}));
        app_->add_option("--fwsi-weight", fwsi_weight, "Weight of a serious injury in FWSI");
        app_->add_option("--method", method, "Test method")->check(CLI::IsMember({"rate-ratio", "bayes", "both"}));
        app_->add_option("--prior-alpha", prior_alpha, "Beta prior alpha for --method bayes");
        app_->add_option("--prior-beta", prior_beta, "Beta prior beta for --method bayes");
        app_->add_option("--thresholds", thresholds, "Probable and potential p thresholds");
        app_->add_option("--posterior-thresholds", posterior, "Alert and warning posterior thresholds");
        app_->add_flag("--gate", gate, "Exit 3 on potential, 4 on probable deterioration (worst method)");
    }

    int run(std::ostream& out) const {
        const auto pt = p_thresholds_from(thresholds);
        const auto qt = posterior_thresholds_from(posterior, "--posterior-thresholds");
        const auto b = ingest::Basis::parse(basis, fwsi_weight);
        const auto records = ingest::parse_accidents_file(accidents);
        const auto exposures = ingest::parse_exposures_file(exposure);
        const auto ref_range = ingest::DateRange::parse(reference);
        const auto target_range = ingest::DateRange::parse(target);
        const auto ref = ingest::aggregate(records, exposures, ref_range, operator_id, category, b);
        const auto tgt = ingest::aggregate(records, exposures, target_range, operator_id, category, b);

        report::Bundle bundle;
        bundle.title = "Safety level assessment: " + operator_id + (category ? " / " + *category : std::string());
        bundle.fwsi_weight = fwsi_weight;
        bundle.p_thresholds = pt;
        bundle.posterior_thresholds = qt;
        auto decorate = [&](report::Comparison c) {
            c.label = operator_id + (category ? " " + *category : std::string());
            c.basis = b.name();
            if (b.kind == ingest::Basis::Kind::Fwsi) {
                c.reference_raw_total = ref.raw_total;
                c.target_raw_total = tgt.raw_total;
            }
            return c;
        };
        if (method == "rate-ratio" || method == "both") {
            bundle.results.push_back(
                decorate(rate_ratio_comparison(ref.window, tgt.window, 1.0, "greater", TwoSidedMethod::Central, pt)));
        }
        if (method == "bayes" || method == "both") {
            bundle.results.push_back(decorate(bayes_comparison({prior_alpha, prior_beta}, ref.window, tgt.window, qt)));
        }
        report::emit_report(out, bundle, output.parsed(), output.text());
        return gate ? gate_code(worst(bundle.results)) : kExitOk;
    }

    CLI::App* app_ = nullptr;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Statistical assessment of railway safety levels"};
    app.name("safelevel");
    app.require_subcommand(1);

    TestCommand test;
    TableCommand table;
    BayesCommand bayes;
    CompareCommand compare;
    SimulateCommand simulate_cmd;
    PowerCommand power;
    AssessCommand assess;
    test.add(app);
    table.add(app);
    bayes.add(app);
    compare.add(app);
    simulate_cmd.add(app);
    power.add(app);
    assess.add(app);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (test.app_->parsed()) return test.run(out);
        if (table.app_->parsed()) return table.run(out);
        if (bayes.app_->parsed()) return bayes.run(out);
        if (compare.app_->parsed()) return compare.run(out);
        if (simulate_cmd.app_->parsed()) return simulate_cmd.run(out);
        if (power.app_->parsed()) return power.run(out);
        if (assess.app_->parsed()) return assess.run(out);
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}

}  // namespace safelevel::cli
