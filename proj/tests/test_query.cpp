#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pwh/bench.hpp"
#include "pwh/construct.hpp"
#include "pwh/error.hpp"
#include "pwh/query.hpp"
#include "pwh/stats.hpp"

using namespace pwh;

namespace {

BinMeta bin(Value lo, Value hi, Count u, Count h = 5000) {
    BinMeta b;
    b.v_min = lo;
    b.v_max = hi;
    b.unique = u;
    b.count = h;
    b.mid = (static_cast<double>(lo) + static_cast<double>(hi)) / 2.0;
    b.c_lo = static_cast<double>(lo);
    b.c_hi = static_cast<double>(hi);
    return b;
}

// The five width-100 bins of the worked example.
std::vector<BinMeta> example_bins() {
    std::vector<BinMeta> out;
    for (Value t = 0; t < 5; ++t) out.push_back(bin(100 * t, 100 * (t + 1), 101));
    return out;
}

Condition cond(CompareOp op, double lit, std::uint32_t col = 0) {
    Condition c;
    c.column = col;
    c.op = op;
    c.literal = lit;
    return c;
}

const Synopsis& desk_synopsis() {
    static const auto table = oracle::desk_table(20000, 77);
    static const Synopsis syn = [] {
        Params p;
        p.samples = 20000;
        p.min_points = 200;
        return build_pairwise_hist(table, p);
    }();
    return syn;
}

const Table& desk_data() {
    static const auto table = oracle::desk_table(20000, 77);
    return table;
}

WeightingsVector raw_w(std::vector<double> w) {
    WeightingsVector v;
    v.w = w;
    v.w_lo = w;
    v.w_hi = w;
    return v;
}

}  // namespace

TEST(Parse, AvgPlan) {
    const auto& syn = desk_synopsis();
    const auto plan = parse_query("SELECT AVG(u_dec) FROM t WHERE u_int > 10", syn);
    EXPECT_EQ(plan.aggregate, Aggregate::Avg);
    EXPECT_EQ(plan.agg_column, 1u);
    ASSERT_TRUE(plan.predicate);
    EXPECT_EQ(plan.predicate->kind, Predicate::Kind::Leaf);
}

TEST(Parse, AndBindsTighterThanOr) {
    const auto plan = parse_query("SELECT COUNT(*) FROM t WHERE u_int > 1 AND u_dec < 2 OR skew < 3 AND cat = 'beta'",
                                  desk_synopsis());
    ASSERT_TRUE(plan.predicate);
    const auto& p = *plan.predicate;
    ASSERT_EQ(p.kind, Predicate::Kind::Or);
    ASSERT_EQ(p.children.size(), 2u);
    for (const auto& c : p.children) {
        EXPECT_EQ(c.kind, Predicate::Kind::And);
        EXPECT_EQ(c.children.size(), 2u);
    }
    EXPECT_FALSE(plan.agg_column);
}

TEST(Parse, ParenthesesOverridePrecedence) {
    const auto plan =
        parse_query("SELECT COUNT(*) FROM t WHERE u_int > 1 AND (u_dec < 2 OR skew < 3)", desk_synopsis());
    ASSERT_EQ(plan.predicate->kind, Predicate::Kind::And);
    EXPECT_EQ(plan.predicate->children.back().kind, Predicate::Kind::Or);
}

TEST(Parse, GroupByRecorded) {
    const auto plan = parse_query("SELECT SUM(skew) FROM t GROUP BY cat", desk_synopsis());
    EXPECT_EQ(plan.group_by, 3u);
}

TEST(Parse, Errors) {
    const auto& syn = desk_synopsis();
    try {
        parse_query("SELECT MODE(u_int) FROM t", syn);
        FAIL();
    } catch (const QueryError& e) {
        EXPECT_NE(std::string(e.what()).find("unsupported query shape"), std::string::npos);
    }
    EXPECT_THROW(parse_query("SELECT AVG(nope) FROM t", syn), QueryError);
    EXPECT_THROW(parse_query("SELECT AVG(u_int) FROM t WHERE nope > 3", syn), QueryError);
    EXPECT_THROW(parse_query("SELECT AVG(cat) FROM t", syn), QueryError);
    EXPECT_THROW(parse_query("SELECT AVG(u_int) FROM t WHERE u_int >", syn), QueryError);
}

TEST(Parse, BetweenAndNull) {
    const auto plan = parse_query("SELECT COUNT(*) FROM t WHERE u_int BETWEEN 3 AND 9 OR skew IS NOT NULL",
                                  desk_synopsis());
    ASSERT_EQ(plan.predicate->kind, Predicate::Kind::Or);
    const auto& between = plan.predicate->children.front();
    ASSERT_EQ(between.kind, Predicate::Kind::And);
    EXPECT_EQ(between.children[0].condition.op, CompareOp::GreaterEqual);
    EXPECT_EQ(between.children[1].condition.op, CompareOp::LessEqual);
    const auto& null_test = plan.predicate->children.back().condition;
    EXPECT_EQ(null_test.kind, Condition::Literal::Null);
    EXPECT_EQ(null_test.op, CompareOp::NotEqual);
}

TEST(Coverage, WorkedExampleVectors) {
    const auto bins = example_bins();
    EXPECT_EQ(coverage(cond(CompareOp::Greater, 81), bins), (std::vector<double>{0.19, 1, 1, 1, 1}));
    EXPECT_EQ(coverage(cond(CompareOp::Less, 231), bins), (std::vector<double>{1, 1, 0.31, 0, 0}));
    EXPECT_EQ(coverage(cond(CompareOp::Less, 381), bins), (std::vector<double>{1, 1, 1, 0.81, 0}));
    const Condition both[] = {cond(CompareOp::Greater, 81), cond(CompareOp::Less, 231)};
    Params p;
    p.min_points = 100;
    const auto cv = consolidate_same_column(both, Predicate::Kind::And, bins, p);
    EXPECT_EQ(cv.beta, (std::vector<double>{0.19, 1, 0.31, 0, 0}));
}

TEST(Coverage, EqualityAndComplement) {
    const std::vector<BinMeta> bins{bin(0, 10, 4), bin(20, 30, 4)};
    EXPECT_EQ(coverage(cond(CompareOp::Equal, 5), bins), (std::vector<double>{0.25, 0}));
    EXPECT_EQ(coverage(cond(CompareOp::NotEqual, 5), bins), (std::vector<double>{0.75, 1}));
}

TEST(Coverage, TwoValueBinIsHalf) {
    const std::vector<BinMeta> bins{bin(0, 10, 2)};
    EXPECT_EQ(coverage(cond(CompareOp::Less, 5), bins)[0], 0.5);
    EXPECT_EQ(coverage(cond(CompareOp::Less, 11), bins)[0], 1.0);
    EXPECT_EQ(coverage(cond(CompareOp::Less, 0), bins)[0], 0.0);
}

TEST(Coverage, IdentityUnderAnd) {
    const auto bins = example_bins();
    const Condition both[] = {cond(CompareOp::Greater, -5), cond(CompareOp::Less, 231)};
    Params p;
    p.min_points = 100;
    EXPECT_EQ(consolidate_same_column(both, Predicate::Kind::And, bins, p).beta,
              coverage(cond(CompareOp::Less, 231), bins));
}

TEST(Coverage, DisjointOrMatchesDenseScan) {
    const std::vector<BinMeta> bins{bin(0, 100, 1000)};
    const Condition either[] = {cond(CompareOp::Less, 10), cond(CompareOp::Greater, 90)};
    Params p;
    p.min_points = 100;
    const double beta = consolidate_same_column(either, Predicate::Kind::Or, bins, p).beta[0];
    EXPECT_DOUBLE_EQ(beta, 0.2);
    const int n = 1000000;
    int hit = 0;
    for (int k = 0; k < n; ++k) {
        const double x = 100.0 * (k + 0.5) / n;
        hit += x < 10 || x > 90;
    }
    EXPECT_NEAR(beta, static_cast<double>(hit) / n, 1e-6);
}

TEST(Coverage, MonotoneInRange) {
    const auto bins = example_bins();
    std::vector<double> prev(bins.size(), 0.0);
    for (double lit = -10; lit <= 510; lit += 7.5) {
        const auto b = coverage(cond(CompareOp::Less, lit), bins);
        for (std::size_t t = 0; t < b.size(); ++t) EXPECT_GE(b[t], prev[t]);
        prev = b;
    }
}

TEST(CoverageBounds, Examples) {
    EXPECT_EQ(coverage_bounds(1.0, 1000, 500, 100, 0.001), std::make_pair(1.0, 1.0));
    EXPECT_EQ(coverage_bounds(0.0, 1000, 500, 100, 0.001), std::make_pair(0.0, 0.0));
    const auto [lo50, hi50] = coverage_bounds(0.4, 50, 40, 100, 0.001);
    EXPECT_DOUBLE_EQ(lo50, 0.02);
    EXPECT_DOUBLE_EQ(hi50, 0.98);
    const auto [lo, hi] = coverage_bounds(0.35, 1000, 500, 100, 0.001);
    const double chi = chi_squared_critical(10, 0.001);
    EXPECT_NEAR(lo, 0.3 * (1 - std::sqrt(chi * 7 / 3000)), 1e-12);
    EXPECT_NEAR(hi, 0.4 * (1 + std::sqrt(chi * 6 / 4000)), 1e-12);
    EXPECT_NEAR(lo, 0.2235, 5e-5);
    EXPECT_NEAR(hi, 0.4818, 5e-5);
}

TEST(CoverageBounds, ZeroFullSubbinsGivesZeroLower) {
    const auto [lo, hi] = coverage_bounds(0.05, 1000, 500, 100, 0.001);
    EXPECT_EQ(lo, 0.0);
    EXPECT_GT(hi, 0.1);
}

TEST(CoverageBounds, BracketExtremalSubbinVectors) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const double h = 1000 + static_cast<double>(rng() % 9001);
        const auto s = static_cast<std::uint32_t>(2 + rng() % 9);
        const auto b = static_cast<std::uint32_t>(1 + rng() % (s - 1));
        const double chi = chi_squared_critical(s, 0.01);
        const long double radius = std::sqrt(static_cast<long double>(chi) * h / s);
        std::vector<long double> g(s, 0.0L);
        for (std::uint32_t r = 0; r < b; ++r) g[r] = 1.0L;
        const long double best = oracle::extremal_linear(g, radius, true, trial + 1);
        const long double worst = oracle::extremal_linear(g, radius, false, trial + 1);
        const double max_frac = static_cast<double>((b * h / s + best) / h);
        const double min_frac = static_cast<double>((b * h / s + worst) / h);
        const auto [lo, hi] = analytic_partial_bounds(h, s, b, b, chi);
        EXPECT_NEAR(hi, max_frac, 1e-6) << h << " " << s << " " << b;
        EXPECT_NEAR(lo, min_frac, 1e-6) << h << " " << s << " " << b;
    }
}

TEST(Weightings, EmptyPredicateIsCounts) {
    const auto& syn = desk_synopsis();
    const auto plan = parse_query("SELECT AVG(skew) FROM t", syn);
    const auto w = weightings(plan, syn);
    ASSERT_EQ(w.column, 2u);
    for (std::size_t t = 0; t < w.w.size(); ++t) {
        const double h = static_cast<double>(syn.hists1d[2].bins[t].count);
        EXPECT_EQ(w.w[t], h);
        EXPECT_EQ(w.w_lo[t], h);
        EXPECT_EQ(w.w_hi[t], h);
    }
}

TEST(Weightings, FullSampleSkipsWidening) {
    const auto& syn = desk_synopsis();
    ASSERT_EQ(syn.params.samples, syn.params.rows);
    const auto plan = parse_query("SELECT AVG(u_int) FROM t WHERE u_int < 4321", syn);
    const auto w = weightings(plan, syn);
    const auto cv = coverage(plan.predicate->condition, syn.hists1d[0].bins);
    for (std::size_t t = 0; t < w.w.size(); ++t) {
        const auto& b = syn.hists1d[0].bins[t];
        const auto [lo, hi] = coverage_bounds(cv[t], b.count, b.unique, syn.params.min_points, syn.params.alpha);
        EXPECT_DOUBLE_EQ(w.w_lo[t], lo * static_cast<double>(b.count));
        EXPECT_DOUBLE_EQ(w.w_hi[t], hi * static_cast<double>(b.count));
    }
}

TEST(Weightings, SamplingWidensBounds) {
    const auto& table = desk_data();
    Params p;
    p.samples = 5000;
    p.min_points = 100;
    const auto syn = build_pairwise_hist(table, p);
    const auto plan = parse_query("SELECT AVG(u_int) FROM t WHERE u_dec < 500", syn);
    QueryOptions printed, binomial;
    binomial.widening = Widening::BinomialCount;
    const auto a = weightings(plan, syn, printed), b = weightings(plan, syn, binomial);
    for (std::size_t t = 0; t < a.w.size(); ++t) {
        EXPECT_LE(a.w_lo[t], a.w[t]);
        EXPECT_GE(a.w_hi[t], a.w[t]);
        EXPECT_LE(b.w_lo[t], a.w_lo[t]);
        EXPECT_GE(b.w_hi[t], a.w_hi[t]);
        EXPECT_LE(b.w_hi[t], static_cast<double>(syn.hists1d[0].bins[t].count));
        EXPECT_GE(b.w_lo[t], 0.0);
    }
}

TEST(Weightings, IndependentHalfSelection) {
    const auto& syn = desk_synopsis();
    const auto& table = desk_data();
    const auto plan = parse_query("SELECT AVG(u_int) FROM t WHERE u_dec < 500", syn);
    const auto w = weightings(plan, syn);
    const auto& hist = syn.hists1d[0];
    std::vector<double> exact(hist.size(), 0.0);
    for (std::size_t r = 0; r < table.rows(); ++r)
        if (row_matches(table, *plan.predicate, r)) exact[hist.find(table.columns[0][r])] += 1;
    double sw = 0, se = 0;
    std::size_t inside = 0;
    for (std::size_t t = 0; t < hist.size(); ++t) {
        const double h = static_cast<double>(hist.bins[t].count);
        EXPECT_NEAR(w.w[t], h / 2, 0.1 * h) << t;
        inside += exact[t] >= w.w_lo[t] - 1e-9 && exact[t] <= w.w_hi[t] + 1e-9;
        sw += w.w[t];
        se += exact[t];
    }
    EXPECT_GE(inside, hist.size() * 9 / 10);
    EXPECT_NEAR(sw / se, 1.0, 0.02);
}

TEST(Weightings, OrOfAndsFollowsProductFormula) {
    const auto& syn = desk_synopsis();
    const auto plan = parse_query(
        "SELECT AVG(u_int) FROM t WHERE u_dec > 120 AND u_dec < 610 OR u_dec < 800 AND skew > 30", syn);
    const auto w = weightings(plan, syn);
    const auto& ors = plan.predicate->children;
    const Condition g12[] = {ors[0].children[0].condition, ors[0].children[1].condition};
    const auto& c3 = ors[1].children[0].condition;
    const auto& c4 = ors[1].children[1].condition;

    const auto& h12 = syn.pair(0, 1);
    const auto& h13 = syn.pair(0, 2);
    const auto b12 = consolidate_same_column(g12, Predicate::Kind::And, h12.col_meta, syn.params).beta;
    const auto b3 = coverage(c3, h12.col_meta);
    const auto b4 = coverage(c4, h13.col_meta);
    const auto& h1 = syn.hists1d[0];
    auto project = [&](const Histogram2D& h2, const std::vector<double>& beta) {
        std::vector<double> out(h1.size(), 0.0);
        for (std::size_t r = 0; r < h2.rows(); ++r)
            for (std::size_t c = 0; c < h2.cols(); ++c)
                out[h2.row_to_1d[r]] += static_cast<double>(h2.at(r, c)) * beta[c];
        return out;
    };
    const auto p12 = project(h12, b12), p3 = project(h12, b3), p4 = project(h13, b4);
    for (std::size_t t = 0; t < h1.size(); ++t) {
        const double h = static_cast<double>(h1.bins[t].count);
        const double prob = 1 - (1 - p12[t] / h) * (1 - p3[t] * p4[t] / (h * h));
        EXPECT_NEAR(w.w[t], prob * h, 1e-9 * h) << t;
    }
}

TEST(Aggregates, Count) {
    EXPECT_DOUBLE_EQ(estimate_count(raw_w({20, 30}), 0.1).estimate, 500.0);
    const auto& syn = desk_synopsis();
    const auto r = run_query("SELECT COUNT(*) FROM t", syn);
    EXPECT_EQ(r.estimate, 20000.0);
    EXPECT_EQ(r.lower, 20000.0);
    EXPECT_EQ(r.upper, 20000.0);
}

TEST(Aggregates, CountKnownSelection) {
    std::vector<std::vector<RawCell>> cols(1);
    for (int k = 0; k < 10000; ++k) cols[0].emplace_back(std::to_string(k));
    const auto table = oracle::make_table(cols, {"x"});
    Params p;
    p.samples = 10000;
    p.min_points = 100;
    const auto syn = build_pairwise_hist(table, p);
    const auto r = run_query("SELECT COUNT(*) FROM t WHERE x < 2500", syn);
    EXPECT_LE(r.lower, 2500.0);
    EXPECT_GE(r.upper, 2500.0);
    EXPECT_NEAR(r.estimate, 2500.0, 125.0);
}

TEST(Aggregates, SumSingleBin) {
    ColumnSpec spec;
    const std::vector<BinMeta> bins{bin(0, 10, 11)};
    EXPECT_DOUBLE_EQ(estimate_sum(raw_w({10}), bins, spec, 0.5).estimate, 100.0);
}

TEST(Aggregates, SumDecodesOffsetAndScale) {
    ColumnSpec spec;
    spec.kind = ColumnKind::Decimal;
    spec.scale = 10;
    spec.offset = 250;
    const std::vector<BinMeta> bins{bin(0, 10, 11)};
    // mid 5 decodes to 25.5 per row.
    EXPECT_DOUBLE_EQ(estimate_sum(raw_w({4}), bins, spec, 1.0).estimate, 102.0);
}

TEST(Aggregates, AvgOfTwoBins) {
    ColumnSpec spec;
    const std::vector<BinMeta> bins{bin(10, 10, 1), bin(30, 30, 1)};
    const auto r = estimate_avg(raw_w({1, 1}), bins, spec);
    EXPECT_DOUBLE_EQ(r.estimate, 20.0);
    EXPECT_TRUE(estimate_avg(raw_w({0, 0}), bins, spec).empty);
}

TEST(Aggregates, VarOfTwoPointMasses) {
    ColumnSpec spec;
    const std::vector<BinMeta> bins{bin(0, 0, 1), bin(10, 10, 1)};
    const auto r = estimate_var(raw_w({7, 7}), bins, spec);
    EXPECT_DOUBLE_EQ(r.estimate, 25.0);
    EXPECT_LE(r.lower, 25.0);
    EXPECT_GE(r.upper, 25.0);
    EXPECT_DOUBLE_EQ(estimate_var(raw_w({5}), std::vector<BinMeta>{bin(3, 3, 1)}, spec).estimate, 0.0);
}

TEST(Aggregates, MedianTwoValueOverride) {
    ColumnSpec spec;
    const std::vector<BinMeta> bins{bin(0, 9, 10), bin(10, 20, 2), bin(21, 30, 10)};
    AggregationWork work;
    const auto r = estimate_median(raw_w({3, 10, 7}), bins, spec, &work);
    EXPECT_EQ(work.t_star, 1u);
    EXPECT_NEAR(work.f, 0.7, 1e-12);
    EXPECT_EQ(r.estimate, 20.0);
    const std::vector<BinMeta> one{bin(42, 42, 1)};
    EXPECT_EQ(estimate_median(raw_w({9}), one, spec).estimate, 42.0);
}

TEST(Aggregates, MinTwoValueOverride) {
    ColumnSpec spec;
    Params p;
    p.min_points = 10;
    const std::vector<BinMeta> bins{bin(0, 5, 2, 100), bin(6, 50, 30, 100)};
    const auto r = estimate_extremum(Aggregate::Min, raw_w({10, 100}), bins, spec, true, p, 0, 50);
    EXPECT_EQ(r.estimate, 5.0);
    const auto multi = estimate_extremum(Aggregate::Min, raw_w({10, 100}), bins, spec, false, p, 0, 50);
    EXPECT_EQ(multi.estimate, 0.0);
    const auto full = estimate_extremum(Aggregate::Max, raw_w({100, 100}), bins, spec, true, p, 0, 50);
    EXPECT_EQ(full.estimate, 50.0);
}

TEST(Aggregates, ScalingWeightsKeepsSelectedBin) {
    ColumnSpec spec;
    Params p;
    p.min_points = 10;
    const std::vector<BinMeta> bins{bin(0, 9, 10), bin(10, 20, 2), bin(21, 30, 10)};
    const std::vector<double> base{3, 10, 7};
    std::vector<double> scaled;
    for (double x : base) scaled.push_back(x * 3.7);
    EXPECT_EQ(estimate_median(raw_w(base), bins, spec).estimate, estimate_median(raw_w(scaled), bins, spec).estimate);
    for (auto kind : {Aggregate::Min, Aggregate::Max})
        EXPECT_EQ(estimate_extremum(kind, raw_w(base), bins, spec, false, p, 0, 30).estimate,
                  estimate_extremum(kind, raw_w(scaled), bins, spec, false, p, 0, 30).estimate);
}

TEST(Aggregates, CategoricalRejected) {
    ColumnSpec spec;
    spec.kind = ColumnKind::Categorical;
    const std::vector<BinMeta> bins{bin(0, 3, 4)};
    try {
        estimate_sum(raw_w({1}), bins, spec, 1.0);
        FAIL();
    } catch (const QueryError& e) {
        EXPECT_STREQ(e.what(), "SUM undefined for categorical");
    }
    EXPECT_THROW(estimate_var(raw_w({1}), bins, spec), QueryError);
}

TEST(Execute, ConstantColumn) {
    std::vector<std::vector<RawCell>> cols(2);
    for (int k = 0; k < 3000; ++k) {
        cols[0].emplace_back("7.5");
        cols[1].emplace_back(std::to_string(k % 300));
    }
    const auto table = oracle::make_table(cols, {"c", "x"});
    Params p;
    p.samples = 3000;
    p.min_points = 100;
    const auto syn = build_pairwise_hist(table, p);
    EXPECT_DOUBLE_EQ(run_query("SELECT SUM(c) FROM t", syn).estimate, 3000 * 7.5);
    EXPECT_DOUBLE_EQ(run_query("SELECT AVG(c) FROM t WHERE x < 120", syn).estimate, 7.5);
    EXPECT_DOUBLE_EQ(run_query("SELECT VAR(c) FROM t WHERE x > 20", syn).estimate, 0.0);
    EXPECT_DOUBLE_EQ(run_query("SELECT MEDIAN(c) FROM t", syn).estimate, 7.5);
}

TEST(Execute, EmptySelection) {
    const auto& syn = desk_synopsis();
    EXPECT_TRUE(run_query("SELECT AVG(u_int) FROM t WHERE cat = 'nope'", syn).empty);
    EXPECT_TRUE(run_query("SELECT MIN(u_int) FROM t WHERE u_int < -5", syn).empty);
    const auto c = run_query("SELECT COUNT(*) FROM t WHERE u_int < -5", syn);
    EXPECT_FALSE(c.empty);
    EXPECT_EQ(c.estimate, 0.0);
    const auto s = run_query("SELECT SUM(u_int) FROM t WHERE u_int < -5", syn);
    EXPECT_FALSE(s.empty);
    EXPECT_EQ(s.estimate, 0.0);
}

TEST(Execute, GroupByCountsAddUp) {
    std::vector<std::vector<RawCell>> cols(2);
    std::mt19937_64 rng(4);
    static const char* labels[] = {"red", "green", "blue"};
    for (int k = 0; k < 6000; ++k) {
        cols[0].emplace_back(std::to_string(rng() % 1000));
        cols[1].emplace_back(labels[rng() % 3 == 0 ? 0 : k % 3]);
    }
    const auto table = oracle::make_table(cols, {"x", "g"});
    Params p;
    p.samples = 6000;
    p.min_points = 100;
    const auto syn = build_pairwise_hist(table, p);
    const auto sql = "SELECT COUNT(*) FROM t WHERE x < 700 GROUP BY g";
    const auto r = run_query(sql, syn);
    ASSERT_EQ(r.groups.size(), 3u);
    double est = 0, lo = 0, hi = 0;
    for (const auto& g : r.groups) est += g.estimate, lo += g.lower, hi += g.upper;
    EXPECT_LE(lo, r.upper);
    EXPECT_GE(hi, r.lower);
    EXPECT_NEAR(est, r.estimate, 0.02 * r.estimate);
    const auto exact = exact_oracle(table, parse_query(sql, syn));
    ASSERT_EQ(exact.groups.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(r.groups[k].label, exact.groups[k].label);
        EXPECT_NEAR(r.groups[k].estimate, exact.groups[k].value, 0.05 * exact.groups[k].value);
    }
}

TEST(Execute, SandwichAndAvgConsistency) {
    const auto& syn = desk_synopsis();
    GeneratorOptions g;
    g.count = 150;
    g.seed = 21;
    for (const auto& q : generate_queries(desk_data(), g)) {
        const auto r = execute(q.plan, syn);
        if (r.empty) continue;
        EXPECT_LE(r.lower, r.estimate) << q.sql;
        EXPECT_LE(r.estimate, r.upper) << q.sql;
        if (q.plan.aggregate != Aggregate::Avg) continue;
        auto as = [&](Aggregate a) {
            auto plan = q.plan;
            plan.aggregate = a;
            return execute(plan, syn).estimate;
        };
        EXPECT_NEAR(r.estimate, as(Aggregate::Sum) / as(Aggregate::Count), 1e-9 * std::fabs(r.estimate) + 1e-12)
            << q.sql;
    }
}

TEST(Execute, MinBoundsContainTruth) {
    const auto& syn = desk_synopsis();
    const auto& table = desk_data();
    GeneratorOptions g;
    g.count = 120;
    g.seed = 5;
    g.aggregates = {Aggregate::Min};
    std::size_t hit = 0, total = 0;
    for (const auto& q : generate_queries(table, g)) {
        const auto r = execute(q.plan, syn);
        const auto e = exact_oracle(table, q.plan);
        if (e.empty) continue;
        ++total;
        hit += !r.empty && r.lower <= e.value + 1e-9 && e.value <= r.upper + 1e-9;
    }
    ASSERT_GE(total, 100u);
    EXPECT_GE(static_cast<double>(hit), 0.95 * static_cast<double>(total));
}

TEST(Execute, UniformTruthInsideBounds) {
    const auto& syn = desk_synopsis();
    const auto& table = desk_data();
    for (const char* sql : {"SELECT MEDIAN(u_int) FROM t", "SELECT VAR(u_int) FROM t", "SELECT SUM(u_dec) FROM t",
                            "SELECT AVG(skew) FROM t"}) {
        const auto plan = parse_query(sql, syn);
        const auto r = execute(plan, syn);
        const auto e = exact_oracle(table, plan);
        EXPECT_LE(r.lower, e.value) << sql;
        EXPECT_GE(r.upper, e.value) << sql;
    }
    const auto med = run_query("SELECT MEDIAN(u_int) FROM t", syn);
    const auto exact = exact_oracle(table, parse_query("SELECT MEDIAN(u_int) FROM t", syn)).value;
    const auto& hist = syn.hists1d[0];
    const auto t = hist.find(static_cast<Value>(exact));
    EXPECT_LE(std::fabs(med.estimate - exact), static_cast<double>(hist.edges[t + 1] - hist.edges[t]));
}
