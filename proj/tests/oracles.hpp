#pragma once

// Independent reference implementations used only by tests.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pwh/model.hpp"
#include "pwh/preprocess.hpp"

namespace oracle {

// Extremum of g.eps over {sum eps = 0, |eps| = radius} by projected gradient steps.
inline long double extremal_linear_once(const std::vector<long double>& g, long double radius, bool maximize,
                                        std::mt19937_64& rng) {
    const std::size_t n = g.size();
    std::normal_distribution<double> gauss;
    std::vector<long double> eps(n);
    for (auto& e : eps) e = gauss(rng);
    auto project = [&](std::vector<long double>& v) {
        long double mean = 0;
        for (auto x : v) mean += x;
        mean /= static_cast<long double>(n);
        long double norm = 0;
        for (auto& x : v) {
            x -= mean;
            norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm == 0) return;
        for (auto& x : v) x *= radius / norm;
    };
    project(eps);
    long double gnorm = 0;
    for (auto x : g) gnorm += x * x;
    const long double step = radius / std::sqrt(gnorm + 1e-30L);
    long double prev = 0;
    for (int it = 0; it < 200000; ++it) {
        for (std::size_t r = 0; r < n; ++r) eps[r] += (maximize ? step : -step) * g[r];
        project(eps);
        long double val = 0;
        for (std::size_t r = 0; r < n; ++r) val += g[r] * eps[r];
        if (it > 10 && std::fabs(val - prev) < 1e-18L * (1 + std::fabs(val))) break;
        prev = val;
    }
    long double val = 0;
    for (std::size_t r = 0; r < n; ++r) val += g[r] * eps[r];
    return val;
}

// Best of several restarts; the sphere is two points when n = 2, so one start can sit on the wrong one.
inline long double extremal_linear(const std::vector<long double>& g, long double radius, bool maximize,
                                   std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    long double best = extremal_linear_once(g, radius, maximize, rng);
    for (int k = 1; k < 8; ++k) {
        const long double v = extremal_linear_once(g, radius, maximize, rng);
        best = maximize ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

// Rice code as a '0'/'1' string: q ones, a zero, then k remainder bits.
inline std::string rice_bits(std::uint64_t v, unsigned k) {
    std::string out(v >> k, '1');
    out.push_back('0');
    for (unsigned b = k; b-- > 0;) out.push_back(((v >> b) & 1) ? '1' : '0');
    return out;
}

inline std::vector<std::uint8_t> pack_bits(const std::string& bits) {
    std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i] == '1') out[i / 8] |= static_cast<std::uint8_t>(0x80 >> (i % 8));
    return out;
}

// Row predicate evaluated on decoded raw values, separately from the library's row_matches.
inline bool naive_match(const pwh::Table& t, const pwh::Predicate& p, std::size_t row) {
    if (p.kind != pwh::Predicate::Kind::Leaf) {
        bool any = false, all = true;
        for (const auto& c : p.children) {
            const bool m = naive_match(t, c, row);
            any = any || m;
            all = all && m;
        }
        return p.kind == pwh::Predicate::Kind::And ? all : any;
    }
    const auto& c = p.condition;
    const auto& spec = t.specs[c.column];
    const auto raw = pwh::decode_cell(t.columns[c.column][row], spec);
    if (c.kind == pwh::Condition::Literal::Null) return (c.op == pwh::CompareOp::Equal) == !raw.has_value();
    if (!raw) return false;
    if (c.kind == pwh::Condition::Literal::UnknownCategory) return c.op == pwh::CompareOp::NotEqual;
    double x, lit;
    if (spec.kind == pwh::ColumnKind::Categorical) {
        x = static_cast<double>(*spec.rank_of(*raw));
        lit = c.literal;
    } else if (spec.kind == pwh::ColumnKind::Datetime) {
        x = static_cast<double>(*pwh::parse_datetime(*raw));
        lit = c.literal + static_cast<double>(spec.offset);
    } else {
        x = std::stod(*raw);
        lit = spec.decode(c.literal);
        // Compare in scaled units to dodge binary fractions.
        x = std::round(x * static_cast<double>(spec.scale));
        lit = lit * static_cast<double>(spec.scale);
    }
    switch (c.op) {
        case pwh::CompareOp::Less: return x < lit - 1e-9;
        case pwh::CompareOp::Greater: return x > lit + 1e-9;
        case pwh::CompareOp::LessEqual: return x <= lit + 1e-9;
        case pwh::CompareOp::GreaterEqual: return x >= lit - 1e-9;
        case pwh::CompareOp::Equal: return std::fabs(x - lit) <= 1e-9;
        case pwh::CompareOp::NotEqual: return std::fabs(x - lit) > 1e-9;
    }
    return false;
}

// Plain scan with decoded doubles; lower median and population variance.
struct ScanResult {
    double value = 0;
    bool empty = false;
};

inline ScanResult naive_scan(const pwh::Table& t, const pwh::QueryPlan& plan) {
    std::vector<double> xs;
    std::size_t rows = 0;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        if (plan.predicate && !naive_match(t, *plan.predicate, r)) continue;
        ++rows;
        if (plan.agg_column) {
            const auto raw = pwh::decode_cell(t.columns[*plan.agg_column][r], t.specs[*plan.agg_column]);
            if (raw) xs.push_back(t.specs[*plan.agg_column].kind == pwh::ColumnKind::Categorical ? 0.0 : std::stod(*raw));
        }
    }
    using pwh::Aggregate;
    if (plan.aggregate == Aggregate::Count) return {static_cast<double>(plan.agg_column ? xs.size() : rows), false};
    if (plan.aggregate == Aggregate::Sum) return {std::accumulate(xs.begin(), xs.end(), 0.0), false};
    if (xs.empty()) return {0, true};
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    switch (plan.aggregate) {
        case Aggregate::Avg: return {mean, false};
        case Aggregate::Min: return {xs.front(), false};
        case Aggregate::Max: return {xs.back(), false};
        case Aggregate::Median: return {xs[(xs.size() + 1) / 2 - 1], false};
        case Aggregate::Var: {
            double ss = 0;
            for (double x : xs) ss += (x - mean) * (x - mean);
            return {ss / n, false};
        }
        default: return {0, true};
    }
}

// Desk-scale synthetic table: two uniform numeric, one skewed numeric, one categorical.
inline std::vector<std::vector<pwh::RawCell>> desk_cells(std::size_t rows, std::uint64_t seed) {
    // Raw engine output only, so the data is identical on every standard library.
    std::mt19937_64 rng(seed);
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    static const char* labels[] = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
    static const int cumulative[] = {40, 65, 80, 90, 95, 98, 99, 100};
    std::vector<std::vector<pwh::RawCell>> cols(4);
    for (std::size_t r = 0; r < rows; ++r) {
        cols[0].emplace_back(std::to_string(rng() % 10000));
        const auto cents = rng() % 100001;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%d.%02d", static_cast<int>(cents / 100), static_cast<int>(cents % 100));
        cols[1].emplace_back(buf);
        cols[2].emplace_back(std::to_string(static_cast<long>(-40.0 * std::log1p(-unit()))));
        const auto pick = static_cast<int>(rng() % 100);
        int k = 0;
        while (pick >= cumulative[k]) ++k;
        cols[3].emplace_back(labels[k]);
    }
    return cols;
}

inline pwh::Table make_table(const std::vector<std::vector<pwh::RawCell>>& cols,
                             const std::vector<std::string>& names) {
    pwh::Table t;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        auto spec = pwh::infer_column_spec(cols[c]);
        spec.name = names[c];
        spec.id = static_cast<std::uint32_t>(c);
        t.columns.push_back(pwh::encode_column(cols[c], spec));
        t.specs.push_back(std::move(spec));
    }
    return t;
}

inline pwh::Table desk_table(std::size_t rows = 100000, std::uint64_t seed = 2024) {
    return make_table(desk_cells(rows, seed), {"u_int", "u_dec", "skew", "cat"});
}

}  // namespace oracle
