// Acceptance checks: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "safelevel/bayes.hpp"
#include "safelevel/classify.hpp"
#include "safelevel/probkit.hpp"
#include "safelevel/rate_ratio.hpp"
#include "safelevel/simulate.hpp"
#include "support/oracles.hpp"
#include "support/published.hpp"
#include "support/schema.hpp"

using namespace safelevel;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and limits.
constexpr double kOracleTol = 1e-12;
constexpr double kIdentityTol = 1e-10;
constexpr double kBayesTol = 1e-9;
constexpr double kMomentSE = 5.0;
constexpr double kAlphaSE = 4.0;
constexpr double kGofLevel = 0.001;
constexpr double kLimitTable = 1.0;      // seconds
constexpr double kLimitOracle = 1.0;
constexpr double kLimitMoments = 30.0;
constexpr double kLimitErrorRate = 60.0;
constexpr std::uint64_t kSeed = 20240611;

const std::string kSrc = SAFELEVEL_SOURCE_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

double rr_p(std::uint64_t x, double t1, std::uint64_t y, double t2) {
    return rate_ratio_test({x, t1, ""}, {y, t2, ""}).p_one_sided;
}

std::pair<int, std::string> run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str() + err.str()};
}

// 1 -----------------------------------------------------------------------------
Outcome table_reproduction() {
    const auto t0 = Clock::now();
    const auto t = generate_p_table(5, 7, 4, 1);
    const double elapsed = seconds_since(t0);
    int compared = 0, mismatches = 0;
    std::string where;
    for (std::size_t i = 0; i < published::kRows; ++i) {
        for (std::size_t j = 0; j < published::kCols; ++j) {
            const auto cell = published::p_cell(i, j);
            if (!cell.printed) continue;
            ++compared;
            if (std::abs(published::round_to(t.p[i][j], cell.decimals) - cell.value) > 1e-12) {
                ++mismatches;
                where += " (" + std::to_string(i) + "," + std::to_string(j) + ")";
            }
        }
    }
    return {mismatches == 0 && elapsed < kLimitTable,
            std::to_string(compared) + " published cells compared at printed precision, " +
                std::to_string(mismatches) + " mismatches" + where + "; " +
                std::to_string(48 - compared) + " cells unpublished; (5,4) = " + fmt(t.p[5][4], 4) +
                "; " + fmt(elapsed * 1e3, 3) + " ms"};
}

// 2 -----------------------------------------------------------------------------
Outcome marker_reproduction() {
    const auto t = generate_p_table(5, 7, 4, 1);
    int rr_ok = 0, bav_ok = 0;
    for (std::size_t i = 0; i < published::kRows; ++i) {
        for (std::size_t j = 0; j < published::kCols; ++j) {
            const auto cell = published::p_cell(i, j);
            const std::string expected = cell.printed ? cell.marker : "+";
            rr_ok += classify_p(t.p[i][j]).marker == expected;
            bav_ok += classify_posterior(andrasik_table().value[i][j]).marker == andrasik_table().marker[i][j];
        }
    }
    return {rr_ok == 48 && bav_ok == 48,
            "rate-ratio " + std::to_string(rr_ok) + "/48, posterior table " + std::to_string(bav_ok) + "/48"};
}

// 3 -----------------------------------------------------------------------------
Outcome worked_examples() {
    const double g_ref = 1.0 + 1.05 + 1.05 * 1.05 + 1.05 * 1.05 * 1.05;
    const double g_tgt = 1.05 * 1.05 * 1.05 * 1.05;
    struct Case {
        const char* name;
        double p;
        double expected;
    };
    const Case cases[] = {
        {"4 vs 6", rr_p(4, 1, 6, 1), 0.38},
        {"0 vs 1 growth", rr_p(0, g_ref, 1, g_tgt), 0.22},
        {"17/1.0 vs 20/0.7", rr_p(17, 1.0, 20, 0.7), 0.08},
        {"3 vs 11", rr_p(3, 1, 11, 1), 0.03},
    };
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        const bool hit = std::abs(round_half_up(c.p, 2) - c.expected) < 1e-12;
        ok = ok && hit;
        detail += std::string(c.name) + " " + fmt(c.p, 4) + (hit ? "" : " (MISS)") + "; ";
    }
    detail += "reported only: 0 vs 2 growth = " + fmt(rr_p(0, g_ref, 2, g_tgt), 4);
    return {ok, detail};
}

// 4 -----------------------------------------------------------------------------
Outcome oracle_equivalence() {
    const auto t0 = Clock::now();
    int cases = 0;
    double worst = 0.0;
    for (long double p0 : {0.1L, 0.2L, 0.5L}) {
        const double t2 = static_cast<double>(p0), t1 = static_cast<double>(1.0L - p0);
        for (std::uint64_t n = 0; n <= 20; ++n) {
            for (std::uint64_t y = 0; y <= n; ++y) {
                const auto r = rate_ratio_test({n - y, t1, ""}, {y, t2, ""});
                const double expected = n == 0 ? 1.0 : static_cast<double>(oracle::binom_upper(y, n, r.p0));
                worst = std::max(worst, std::abs(r.p_one_sided - expected));
                ++cases;
            }
        }
    }
    const double elapsed = seconds_since(t0);
    return {worst <= kOracleTol && elapsed < kLimitOracle,
            std::to_string(cases) + " cases, max |diff| " + fmt(worst, 3) + ", " + fmt(elapsed * 1e3, 3) + " ms"};
}

// 5 -----------------------------------------------------------------------------
Outcome special_function_identities() {
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> loga(-1.0, 3.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::uint64_t> nd(1, 2000);
    double worst_complement = 0.0, worst_tail = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double a = std::pow(10.0, loga(rng)), b = std::pow(10.0, loga(rng)), x = u(rng);
        worst_complement = std::max(
            worst_complement, std::abs(probkit::reg_inc_beta(a, b, x) + probkit::reg_inc_beta(b, a, 1.0 - x) - 1.0));
        const auto n = nd(rng);
        const auto k = std::uniform_int_distribution<std::uint64_t>(1, n)(rng);
        const double p = u(rng);
        worst_tail = std::max(worst_tail, std::abs(probkit::binom_upper_tail(k, n, p) -
                                                   probkit::reg_inc_beta(double(k), double(n - k + 1), p)));
    }
    return {worst_complement <= kIdentityTol && worst_tail <= kIdentityTol,
            "10000 points; complement max " + fmt(worst_complement, 3) + ", tail/beta max " + fmt(worst_tail, 3)};
}

// 6 -----------------------------------------------------------------------------
double poisson_gof(const simulate::CompoundPoissonSpec& spec, int n, const probkit::RandomStream& root) {
    const double mean = spec.rate * spec.exposure;
    std::vector<double> observed;
    for (int i = 0; i < n; ++i) {
        auto s = root.substream(i);
        const auto k = simulate::simulate_process(spec, s).n_events;
        if (k >= observed.size()) observed.resize(k + 1, 0.0);
        observed[k] += 1.0;
    }
    std::vector<double> ec, oc;
    double e = 0, o = 0, cdf = 0;
    for (std::uint64_t k = 0; cdf < 1.0 - 1e-15 || k < observed.size(); ++k) {
        const double pk = static_cast<double>(oracle::poisson_pmf(k, mean));
        cdf += pk;
        e += n * pk;
        o += k < observed.size() ? observed[k] : 0.0;
        if (e >= 5.0) {
            ec.push_back(e);
            oc.push_back(o);
            e = o = 0;
        }
    }
    ec.back() += e;
    oc.back() += o;
    double stat = 0;
    for (std::size_t i = 0; i < ec.size(); ++i) stat += (oc[i] - ec[i]) * (oc[i] - ec[i]) / ec[i];
    return oracle::chi2_sf(stat, double(ec.size() - 1));
}

double uniformity_ks(const simulate::CompoundPoissonSpec& spec, int n, const probkit::RandomStream& root) {
    std::vector<double> u;
    for (int i = 0; i < n; ++i) {
        auto s = root.substream(i);
        for (double x : simulate::simulate_process(spec, s).event_positions) u.push_back(x / spec.exposure);
    }
    std::sort(u.begin(), u.end());
    const double m = double(u.size());
    double d = 0;
    for (std::size_t i = 0; i < u.size(); ++i) d = std::max({d, (i + 1) / m - u[i], u[i] - i / m});
    return oracle::kolmogorov_sf(d, u.size());
}

Outcome compound_poisson_moments() {
    using namespace simulate;
    const auto t0 = Clock::now();
    const std::pair<const char*, CompoundPoissonSpec> specs[] = {
        {"Constant", {2.0, 3.0, SeverityModel::constant(1.0)}},
        {"Empirical", {2.0, 3.0, SeverityModel({{1.0, EmpiricalSeverity{{1.0, 3.0}, {0.5, 0.5}}}})}},
        {"Pareto3", {1.0, 1.0, SeverityModel({{1.0, ParetoSeverity{1.0, 3.0}}})}},
    };
    bool ok = true;
    std::string detail;
    const probkit::RandomStream root(kSeed);
    for (std::size_t i = 0; i < std::size(specs); ++i) {
        const auto& [name, spec] = specs[i];
        const auto c = check_moments(spec, 100000, root.substream(i), 4);
        const bool hit = std::abs(c.z_mean()) <= kMomentSE && std::abs(c.z_variance()) <= kMomentSE;
        ok = ok && hit;
        detail += std::string(name) + " z=(" + fmt(c.z_mean(), 3) + "," + fmt(c.z_variance(), 3) + "); ";
    }
    const CompoundPoissonSpec gof_spec{1.5, 2.0, SeverityModel::constant(1.0)};
    const double p_gof = poisson_gof(gof_spec, 100000, root.substream(10));
    const double p_ks = uniformity_ks(gof_spec, 30000, root.substream(11));
    const double elapsed = seconds_since(t0);
    ok = ok && p_gof > kGofLevel && p_ks > kGofLevel && elapsed < kLimitMoments;
    detail += "Poisson GOF p=" + fmt(p_gof, 3) + ", KS uniformity p=" + fmt(p_ks, 3) + "; " + fmt(elapsed, 3) + " s";
    return {ok, detail};
}

// 7 -----------------------------------------------------------------------------
Outcome variational_inequality() {
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> lg(-3.0, 3.0);
    int violations = 0;
    double worst_identity = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double nm = std::pow(10.0, lg(rng)), nv = std::pow(10.0, lg(rng));
        const double sm = std::pow(10.0, lg(rng)), sv = std::pow(10.0, lg(rng));
        const auto v = simulate::variational_coefficients(nm, nv, sm, sv);
        if (!(v.v_sn > v.v_n)) ++violations;
        const double id = std::sqrt(v.v_s * v.v_s * v.v_n * v.v_n + v.v_s * v.v_s + v.v_n * v.v_n);
        worst_identity = std::max(worst_identity, std::abs(v.v_sn - id) / id);
        const auto d = simulate::variational_coefficients(nm, nv, sm, 0.0);
        if (d.v_sn != d.v_n) ++violations;
    }
    return {violations == 0 && worst_identity < 1e-12,
            "10000 draws, " + std::to_string(violations) + " violations, identity rel err " + fmt(worst_identity, 3)};
}

// 8 -----------------------------------------------------------------------------
Outcome error_rate_study() {
    const auto t0 = Clock::now();
    simulate::ErrorRateStudy s;
    s.procedure = simulate::RateRatioProcedure{{0.1, 0.25}};
    s.rate_ref = s.rate_target_null = s.rate_target_alt = 1.0;
    s.exposure_ref = 4.0;
    s.exposure_target = 1.0;
    s.replications = 100000;
    const probkit::RandomStream root(kSeed);
    const auto r1 = simulate::estimate_error_rates(s, root, 1);
    const auto r2 = simulate::estimate_error_rates(s, root, 2);
    const auto r8 = simulate::estimate_error_rates(s, root, 8);
    const double elapsed = seconds_since(t0);
    const double exact = static_cast<double>(oracle::poisson_double_sum(4.0L, 1.0L, [](std::uint64_t x, std::uint64_t y) {
        return rate_ratio_test({x, 4, ""}, {y, 1, ""}).p_one_sided <= 0.1;
    }));
    auto same = [](const simulate::ErrorRateReport& a, const simulate::ErrorRateReport& b) {
        return a.null_hits == b.null_hits && a.alt_hits == b.alt_hits && a.alpha_hat == b.alpha_hat &&
               a.power_hat == b.power_hat && a.mc_stderr_alpha == b.mc_stderr_alpha &&
               a.mc_stderr_power == b.mc_stderr_power;
    };
    const double z = (r1.alpha_hat - exact) / r1.mc_stderr_alpha;
    const bool identical = same(r1, r2) && same(r1, r8);
    return {std::abs(z) <= kAlphaSE && identical && elapsed < kLimitErrorRate,
            "alpha_hat " + fmt(r1.alpha_hat, 5) + " vs exact " + fmt(exact, 5) + " (z=" + fmt(z, 3) + "); workers 1/2/8 " +
                (identical ? "bit-identical" : "DIFFER") + "; " + fmt(elapsed, 3) + " s for 3 runs"};
}

// 9 -----------------------------------------------------------------------------
Outcome disagreement_anchor() {
    const auto t = generate_p_table(5, 7, 4, 1);
    DecisionMatrix a(6), b(6);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 8; ++j) {
            a[i].push_back(classify_p(t.p[i][j]));
            b[i].push_back(make_decision(category_from_marker(andrasik_table().marker[i][j]), "andrasik-table"));
        }
    }
    const auto rep = compare_decision_tables(a, b);
    bool c01 = false, c02 = false;
    std::string cells;
    for (const auto& d : rep.disagreements) {
        c01 = c01 || (d.row == 0 && d.column == 1);
        c02 = c02 || (d.row == 0 && d.column == 2);
        cells += " (" + std::to_string(d.row) + "," + std::to_string(d.column) + ")";
    }
    return {c01 && c02, std::to_string(rep.disagreements.size()) + " disagreements:" + cells};
}

// 10 ----------------------------------------------------------------------------
Outcome bayesian_sanity() {
    const BetaPrior u{1, 1};
    const double a = posterior_deterioration_prob(u, {0, 4, ""}, {0, 1, ""}).posterior_deterioration;
    const double b = posterior_deterioration_prob(u, {1, 4, ""}, {1, 1, ""}).posterior_deterioration;
    const double c = posterior_deterioration_prob(u, {0, 2, ""}, {0, 2, ""}).posterior_deterioration;
    const bool examples = std::abs(a - 0.8) <= kBayesTol && std::abs(b - 0.896) <= kBayesTol &&
                          std::abs(c - 0.5) <= kBayesTol;
    const auto [code, out] = run_cli({"bayes", "--calibrate", "--format", "json"});
    bool report_ok = false;
    double objective = NAN, uniform = NAN;
    try {
        const auto doc = json::parse(out);
        const schema::Validator v(schema::load(kSrc + "/schemas/calibration.schema.json"));
        report_ok = code == 0 && v.validate(doc).empty();
        objective = doc["objective"];
        uniform = doc["uniform_objective"];
    } catch (const std::exception&) {
        report_ok = false;
    }
    return {examples && report_ok && objective <= uniform,
            "posteriors " + fmt(a, 10) + ", " + fmt(b, 10) + ", " + fmt(c, 10) + "; calibrated objective " +
                fmt(objective, 4) + " <= Beta(1,1) " + fmt(uniform, 4) + "; residual report " +
                (report_ok ? "schema-valid" : "INVALID")};
}

// 11 ----------------------------------------------------------------------------
Outcome end_to_end() {
    const std::string acc = kSrc + "/data/fixtures/accidents.csv";
    const std::string exp = kSrc + "/data/fixtures/exposure.csv";
    auto assess = [&](const std::string& op, const std::string& ref, const std::string& tgt, const std::string& basis) {
        return run_cli({"assess", "--accidents", acc, "--exposure", exp, "--operator", op, "--reference", ref,
                        "--target", tgt, "--basis", basis, "--format", "json"});
    };
    const schema::Validator v(schema::load(kSrc + "/schemas/report.schema.json"));
    struct Case {
        std::string op, ref, tgt, basis;
        double expected;
        int decimals;
        std::string category;
    };
    const Case cases[] = {
        {"OPA", "2019-01-01..2022-12-31", "2023-01-01..2023-12-31", "events", 0.200, 3, "Potential deterioration"},
        {"OPA", "2019-01-01..2022-12-31", "2023-01-01..2023-12-31", "fatalities", 0.040, 3, "Probable deterioration"},
        {"OPC", "2020-01-01..2023-12-31", "2024-01-01..2024-12-31", "events", 0.22, 2, "Potential deterioration"},
    };
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        const auto [code, out] = assess(c.op, c.ref, c.tgt, c.basis);
        const auto again = assess(c.op, c.ref, c.tgt, c.basis);
        bool hit = false;
        double p = NAN;
        try {
            const auto doc = json::parse(out);
            p = doc["results"][0]["p_one_sided"];
            hit = code == 0 && v.validate(doc).empty() && std::abs(round_half_up(p, c.decimals) - c.expected) < 1e-12 &&
                  doc["results"][0]["decision"]["category"] == c.category && again.second == out;
        } catch (const std::exception&) {
            hit = false;
        }
        ok = ok && hit;
        detail += c.op + "/" + c.basis + " p=" + fmt(p, 4) + (hit ? "" : " (MISS)") + "; ";
    }
    detail += "schema-valid, repeat runs byte-identical";
    return {ok, detail};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"Published p-level table reproduction", table_reproduction},
        {"Marker reproduction", marker_reproduction},
        {"Worked examples", worked_examples},
        {"Oracle equivalence", oracle_equivalence},
        {"Special-function identities", special_function_identities},
        {"Compound Poisson moments", compound_poisson_moments},
        {"Variational-coefficient inequality", variational_inequality},
        {"Error-rate study", error_rate_study},
        {"Disagreement anchor", disagreement_anchor},
        {"Bayesian sanity", bayesian_sanity},
        {"End-to-end assess", end_to_end},
    };
    int failed = 0;
    int index = 1;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  AC" << index++ << "  " << name << ": " << o.detail << std::endl;
    }
    std::cout << (failed == 0 ? "all acceptance criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
    return failed;
}
