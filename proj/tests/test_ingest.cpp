#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "safelevel/ingest.hpp"

using namespace safelevel;
using namespace safelevel::ingest;

namespace {
std::vector<AccidentRecord> accidents(const std::string& body) {
    std::istringstream in("date,operator,category,fatalities,serious_injuries\n" + body);
    return parse_accidents(in);
}
std::vector<ExposureRecord> exposures(const std::string& body) {
    std::istringstream in("operator,period_start,period_end,volume,unit\n" + body);
    return parse_exposures(in);
}
const std::string kYears =
    "OP,2019-01-01,2019-12-31,100,km\n"
    "OP,2020-01-01,2020-12-31,120,km\n"
    "OP,2021-01-01,2021-12-31,90,km\n";
}  // namespace

TEST(Dates, ParseAndRanges) {
    EXPECT_EQ(format_date(parse_date("2020-02-29")), "2020-02-29");
    EXPECT_THROW(parse_date("2021-02-29"), DataError);
    EXPECT_THROW(parse_date("2021-2-01"), DataError);
    EXPECT_THROW(parse_date("20210201"), DataError);
    const auto r = DateRange::parse("2020-01-01..2020-12-31");
    EXPECT_EQ(r.days(), 366);
    EXPECT_TRUE(r.contains(parse_date("2020-12-31")));
    EXPECT_FALSE(r.contains(parse_date("2021-01-01")));
    EXPECT_EQ(DateRange::parse("2020-01-01:2020-01-01").days(), 1);
    EXPECT_THROW(DateRange::parse("2020-02-01..2020-01-01"), DataError);
    EXPECT_THROW(DateRange::parse("2020-02-01"), DataError);
}

TEST(Csv, QuotingAndLineNumbers) {
    std::istringstream in("a,b\r\n\"x,1\",\"he said \"\"hi\"\"\"\n\"multi\nline\",z\n");
    const auto rows = read_csv(in);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1].fields[0], "x,1");
    EXPECT_EQ(rows[1].fields[1], "he said \"hi\"");
    EXPECT_EQ(rows[2].fields[0], "multi\nline");
    EXPECT_EQ(rows[2].line, 3u);
    EXPECT_EQ(csv_escape("plain"), "plain");
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_escape("q\""), "\"q\"\"\"");
    std::istringstream bad("a\n\"open\n");
    EXPECT_THROW(read_csv(bad), IngestError);
}

TEST(ParseAccidents, Basics) {
    EXPECT_TRUE(accidents("").empty());
    const auto one = accidents("2020-05-01,OP,collision,1,2\n");
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(format_date(one[0].date), "2020-05-01");
    EXPECT_EQ(one[0].operator_id, "OP");
    EXPECT_EQ(one[0].category, "collision");
    EXPECT_EQ(one[0].fatalities, 1u);
    EXPECT_EQ(one[0].serious_injuries, 2u);
    // Columns may appear in any order.
    std::istringstream reordered("operator,date,fatalities,serious_injuries,category\nOP,2020-05-01,1,2,collision\n");
    EXPECT_EQ(parse_accidents(reordered), one);
}

TEST(ParseAccidents, ErrorsNameRows) {
    try {
        accidents("2020-05-01,OP,collision,1,2\n2020-05-02,OP,collision,-1,0\n2020-05-03,OP,x,1\n");
        FAIL() << "expected IngestError";
    } catch (const IngestError& e) {
        ASSERT_EQ(e.errors().size(), 2u);
        EXPECT_EQ(e.errors()[0].line, 3u);
        EXPECT_NE(e.errors()[0].message.find("fatalities"), std::string::npos);
        EXPECT_EQ(e.errors()[1].line, 4u);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    std::istringstream missing("date,operator,fatalities,serious_injuries\n");
    EXPECT_THROW(parse_accidents(missing), IngestError);
    std::istringstream empty("");
    EXPECT_THROW(parse_accidents(empty), IngestError);
    EXPECT_THROW(accidents("2020-05-01,OP,collision,1.5,0\n"), IngestError);
}

TEST(ParseExposures, Validation) {
    EXPECT_EQ(exposures(kYears).size(), 3u);
    EXPECT_EQ(exposures("OP,2020-01-01,2020-01-01,1,km\n").size(), 1u);
    EXPECT_THROW(exposures("OP,2020-01-02,2020-01-01,1,km\n"), IngestError);
    EXPECT_THROW(exposures("OP,2020-01-01,2020-12-31,0,km\n"), IngestError);
    EXPECT_THROW(exposures("OP,2020-01-01,2020-12-31,abc,km\n"), IngestError);
}

TEST(RoundTrip, ParseEmitParse) {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> day(0, 2000);
    std::uniform_int_distribution<std::uint64_t> count(0, 9);
    const std::vector<std::string> names{"OP", "A,B", "quote\"d", "multi\nline"};
    std::vector<AccidentRecord> recs;
    for (int i = 0; i < 200; ++i) {
        AccidentRecord r;
        r.date = Date{std::chrono::sys_days{std::chrono::days{18000 + day(rng)}}};
        r.operator_id = names[i % names.size()];
        r.category = names[(i / 2) % names.size()];
        r.fatalities = count(rng);
        r.serious_injuries = count(rng);
        recs.push_back(r);
    }
    std::ostringstream out;
    write_accidents(out, recs);
    std::istringstream in(out.str());
    EXPECT_EQ(parse_accidents(in), recs);

    const auto ex = exposures(kYears + "\"X,Y\",2019-01-01,2019-06-30,0.125,\"train-km, million\"\n");
    std::ostringstream eo;
    write_exposures(eo, ex);
    std::istringstream ei(eo.str());
    EXPECT_EQ(parse_exposures(ei), ex);
}

TEST(Aggregate, ExamplesAndBases) {
    const auto ex = exposures(kYears);
    const auto none = aggregate({}, ex, DateRange::parse("2019-01-01..2019-12-31"), "OP", std::nullopt, Basis::events());
    EXPECT_EQ(none.window.events, 0u);
    EXPECT_DOUBLE_EQ(none.window.exposure, 100.0);
    EXPECT_EQ(none.unit, "km");

    const auto recs = accidents(
        "2019-02-01,OP,collision,1,5\n2019-03-01,OP,derailment,2,0\n2019-04-01,OP,collision,0,0\n"
        "2019-04-01,OTHER,collision,9,9\n2020-01-01,OP,collision,3,3\n");
    const auto window = DateRange::parse("2019-01-01..2019-12-31");
    EXPECT_EQ(aggregate(recs, ex, window, "OP", std::nullopt, Basis::events()).window.events, 3u);
    EXPECT_EQ(aggregate(recs, ex, window, "OP", std::string("collision"), Basis::events()).window.events, 2u);
    EXPECT_EQ(aggregate(recs, ex, window, "OP", std::nullopt, Basis::fatalities()).window.events, 3u);
    const auto fwsi = aggregate(recs, ex, window, "OP", std::nullopt, Basis::fwsi(0.1));
    EXPECT_NEAR(fwsi.raw_total, 3.5, 1e-12);
    EXPECT_EQ(fwsi.window.events, 4u);  // half-up
    const auto fwsi0 = aggregate(recs, ex, window, "OP", std::nullopt, Basis::fwsi(0.0));
    EXPECT_EQ(fwsi0.window.events, aggregate(recs, ex, window, "OP", std::nullopt, Basis::fatalities()).window.events);
    // Linear in the weight.
    const auto w1 = aggregate(recs, ex, window, "OP", std::nullopt, Basis::fwsi(0.3)).raw_total;
    const auto w2 = aggregate(recs, ex, window, "OP", std::nullopt, Basis::fwsi(0.6)).raw_total;
    EXPECT_NEAR(w2 - w1, w1 - fwsi0.raw_total, 1e-12);
    EXPECT_EQ(Basis::parse("fwsi", 0.2).name(), "fwsi");
    EXPECT_THROW(Basis::parse("severity"), DomainError);
}

TEST(Aggregate, ProRatingAndAdditivity) {
    const auto ex = exposures(kYears);
    const auto recs = accidents("2019-07-01,OP,c,1,0\n2020-03-03,OP,c,2,1\n2020-11-30,OP,c,0,0\n2021-01-01,OP,c,1,1\n");
    const auto whole = aggregate(recs, ex, DateRange::parse("2019-07-01..2021-06-30"), "OP", std::nullopt,
                                 Basis::fatalities());
    EXPECT_NEAR(whole.window.exposure, 100.0 * 184 / 365 + 120.0 + 90.0 * 181 / 365, 1e-9);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> split(1, 729);
    const auto first = DateRange::parse("2019-07-01..2019-07-01").first;
    for (int i = 0; i < 200; ++i) {
        const int k = split(rng);
        const Date mid{std::chrono::sys_days{first} + std::chrono::days{k - 1}};
        const Date next{std::chrono::sys_days{first} + std::chrono::days{k}};
        for (const auto& basis : {Basis::events(), Basis::fatalities()}) {
            const auto a = aggregate(recs, ex, {first, mid}, "OP", std::nullopt, basis);
            const auto b = aggregate(recs, ex, {next, DateRange::parse("2021-06-30..2021-06-30").first}, "OP",
                                     std::nullopt, basis);
            const auto all = aggregate(recs, ex, DateRange::parse("2019-07-01..2021-06-30"), "OP", std::nullopt, basis);
            EXPECT_EQ(a.window.events + b.window.events, all.window.events);
            EXPECT_NEAR(a.window.exposure + b.window.exposure, all.window.exposure, 1e-12 * all.window.exposure);
        }
    }
}

TEST(Aggregate, CoverageErrors) {
    const auto ex = exposures(kYears);
    try {
        aggregate({}, ex, DateRange::parse("2018-06-01..2019-12-31"), "OP", std::nullopt, Basis::events());
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("2018-06-01..2018-12-31"), std::string::npos) << e.what();
    }
    EXPECT_THROW(aggregate({}, ex, DateRange::parse("2021-06-01..2022-01-31"), "OP", std::nullopt, Basis::events()),
                 DataError);
    EXPECT_THROW(aggregate({}, ex, DateRange::parse("2019-01-01..2019-12-31"), "NOPE", std::nullopt, Basis::events()),
                 DataError);
    const auto gappy = exposures("OP,2019-01-01,2019-05-31,1,km\nOP,2019-07-01,2019-12-31,1,km\n");
    EXPECT_THROW(aggregate({}, gappy, DateRange::parse("2019-01-01..2019-12-31"), "OP", std::nullopt, Basis::events()),
                 DataError);
    const auto overlap = exposures("OP,2019-01-01,2019-06-30,1,km\nOP,2019-06-30,2019-12-31,1,km\n");
    EXPECT_THROW(aggregate({}, overlap, DateRange::parse("2019-01-01..2019-12-31"), "OP", std::nullopt, Basis::events()),
                 DataError);
    const auto mixed = exposures("OP,2019-01-01,2019-06-30,1,km\nOP,2019-07-01,2019-12-31,1,years\n");
    EXPECT_THROW(aggregate({}, mixed, DateRange::parse("2019-01-01..2019-12-31"), "OP", std::nullopt, Basis::events()),
                 DataError);
}

TEST(Pearson, ExamplesAndInvariance) {
    const std::vector<double> x{1, 2, 3};
    const std::vector<double> y{1, 2, 4};
    EXPECT_NEAR(pearson_correlation(x, x), 1.0, 1e-15);
    const std::vector<double> neg{-1, -2, -3};
    EXPECT_NEAR(pearson_correlation(x, neg), -1.0, 1e-15);
    EXPECT_NEAR(pearson_correlation(x, y), 3.0 / std::sqrt(2.0 * (14.0 / 3.0)), 1e-12);
    EXPECT_NEAR(pearson_correlation(x, y), 0.98198050606, 1e-10);

    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (int i = 0; i < 300; ++i) {
        std::vector<double> a(50), b(50);
        for (int k = 0; k < 50; ++k) {
            a[k] = g(rng);
            b[k] = 0.5 * a[k] + g(rng);
        }
        const double r = pearson_correlation(a, b);
        const double s = scale(rng), shift = g(rng) * 10.0;
        std::vector<double> at(a), bn(b);
        for (auto& v : at) v = s * v + shift;
        for (auto& v : bn) v = -v;
        EXPECT_NEAR(pearson_correlation(at, b), r, 1e-12);
        EXPECT_NEAR(pearson_correlation(a, bn), -r, 1e-12);
    }
    EXPECT_THROW(pearson_correlation(std::vector<double>{1, 1}, std::vector<double>{1, 2}), DomainError);
    EXPECT_THROW(pearson_correlation(std::vector<double>{1}, std::vector<double>{1}), DomainError);
}

TEST(Pearson, ReferenceConstantsAreDisplayOnly) {
    ASSERT_EQ(std::size(kEraReferenceCorrelations), 4u);
    for (const auto& r : kEraReferenceCorrelations) {
        EXPECT_GT(r.value, 0.0);
        EXPECT_LT(r.value, 1.0);
    }
}
