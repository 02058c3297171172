#include "pwh/query.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "pwh/construct.hpp"
#include "pwh/error.hpp"
#include "pwh/stats.hpp"

namespace pwh {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using BetaFn = std::function<double(const BinMeta&)>;

// Satisfaction probabilities per bin of the aggregation column.
struct Prob {
    std::vector<double> p, lo, hi;

    static Prob filled(std::size_t k, double v) { return {std::vector<double>(k, v), std::vector<double>(k, v), std::vector<double>(k, v)}; }
};

double condition_beta(const Condition& c, const BinMeta& bin) {
    using L = Condition::Literal;
    const bool eq = c.op == CompareOp::Equal;
    if (c.kind == L::UnknownCategory || c.kind == L::Null) {
        // No stored (non-null) value equals an unknown label or NULL.
        return eq ? 0.0 : 1.0;
    }
    if (c.is_range()) return set_coverage(IntervalSet::of(c), bin);
    double p = 0.0;
    if (bin.unique > 0 && c.literal == std::floor(c.literal) && c.literal >= static_cast<double>(bin.v_min) &&
        c.literal <= static_cast<double>(bin.v_max))
        p = 1.0 / static_cast<double>(bin.unique);
    return eq ? p : 1.0 - p;
}

BetaFn group_beta(std::vector<Condition> conds, Predicate::Kind combinator) {
    if (conds.size() == 1) {
        return [c = conds.front()](const BinMeta& b) { return condition_beta(c, b); };
    }
    const bool all_range = std::all_of(conds.begin(), conds.end(), [](const Condition& c) { return c.is_range(); });
    if (all_range) {
        IntervalSet set = IntervalSet::of(conds.front());
        for (std::size_t k = 1; k < conds.size(); ++k) {
            const auto s = IntervalSet::of(conds[k]);
            set = combinator == Predicate::Kind::And ? set.intersect(s) : set.unite(s);
        }
        return [set](const BinMeta& b) { return set_coverage(set, b); };
    }
    return [conds = std::move(conds), combinator](const BinMeta& b) {
        double acc = 1.0;
        for (const auto& c : conds) {
            const double beta = condition_beta(c, b);
            acc *= combinator == Predicate::Kind::And ? beta : 1.0 - beta;
        }
        return combinator == Predicate::Kind::And ? acc : 1.0 - acc;
    };
}

CoverageVector coverage_vector(std::uint32_t column, const BetaFn& beta, std::span<const BinMeta> bins,
                               const Params& params) {
    CoverageVector cv;
    cv.column = column;
    for (const auto& b : bins) {
        const double v = std::clamp(beta(b), 0.0, 1.0);
        const auto [lo, hi] = coverage_bounds(v, b.count, b.unique, params.min_points, params.alpha);
        cv.beta.push_back(v);
        cv.beta_lo.push_back(lo);
        cv.beta_hi.push_back(hi);
    }
    return cv;
}

class Evaluator {
public:
    Evaluator(const Synopsis& syn, std::uint32_t agg) : syn_(syn), agg_(agg), hist_(syn.hists1d[agg]) {}

    Prob eval(const Predicate& node) const {
        if (node.kind == Predicate::Kind::Leaf) return leaf_group(node.condition.column, {node.condition}, Predicate::Kind::And);
        std::vector<Prob> parts;
        std::vector<std::uint32_t> order;
        std::vector<std::vector<Condition>> groups;
        for (const auto& child : node.children) {
            if (child.kind != Predicate::Kind::Leaf) {
                parts.push_back(eval(child));
                continue;
            }
            const auto& c = child.condition;
            if (c.kind == Condition::Literal::Null) {
                parts.push_back(leaf_group(c.column, {c}, node.kind));
                continue;
            }
            auto it = std::find(order.begin(), order.end(), c.column);
            if (it == order.end()) {
                order.push_back(c.column);
                groups.push_back({c});
            } else {
                groups[static_cast<std::size_t>(it - order.begin())].push_back(c);
            }
        }
        for (std::size_t g = 0; g < groups.size(); ++g) parts.push_back(leaf_group(order[g], groups[g], node.kind));
        return combine(parts, node.kind);
    }

    // Values of the aggregation column that can satisfy the node.
    IntervalSet admissible(const Predicate& node) const {
        if (node.kind == Predicate::Kind::Leaf) {
            const auto& c = node.condition;
            if (c.column != agg_) return IntervalSet::everything();
            switch (c.kind) {
                case Condition::Literal::Null:
                case Condition::Literal::UnknownCategory:
                    return c.op == CompareOp::Equal ? IntervalSet::nothing() : IntervalSet::everything();
                case Condition::Literal::Value:
                    return c.op == CompareOp::NotEqual ? IntervalSet::everything() : IntervalSet::of(c);
            }
        }
        IntervalSet acc = admissible(node.children.front());
        for (std::size_t k = 1; k < node.children.size(); ++k) {
            const auto s = admissible(node.children[k]);
            acc = node.kind == Predicate::Kind::And ? acc.intersect(s) : acc.unite(s);
        }
        return acc;
    }

private:
    static Prob combine(const std::vector<Prob>& parts, Predicate::Kind kind) {
        Prob out = parts.front();
        const bool conj = kind == Predicate::Kind::And;
        for (std::size_t k = 1; k < parts.size(); ++k) {
            for (std::size_t t = 0; t < out.p.size(); ++t) {
                auto merge = [conj](double a, double b) { return conj ? a * b : 1.0 - (1.0 - a) * (1.0 - b); };
                out.p[t] = merge(out.p[t], parts[k].p[t]);
                out.lo[t] = merge(out.lo[t], parts[k].lo[t]);
                out.hi[t] = merge(out.hi[t], parts[k].hi[t]);
            }
        }
        return out;
    }

    Prob leaf_group(std::uint32_t column, std::vector<Condition> conds, Predicate::Kind combinator) const {
        const std::size_t k = hist_.size();
        const auto& first = conds.front();
        if (first.kind == Condition::Literal::Null) {
            const bool is_null = first.op == CompareOp::Equal;
            if (column == agg_) return Prob::filled(k, is_null ? 0.0 : 1.0);
            // Share of the bin's rows that are non-null in the other column.
            Prob out = lookup(column, [](const BinMeta&) { return 1.0; });
            if (is_null) {
                for (auto& v : out.p) v = 1.0 - v;
                out.lo = out.hi = out.p;
            }
            return out;
        }
        const BetaFn beta = group_beta(std::move(conds), combinator);
        if (column == agg_) {
            const auto cv = coverage_vector(column, beta, hist_.bins, syn_.params);
            return {cv.beta, cv.beta_lo, cv.beta_hi};
        }
        return lookup(column, beta);
    }

    // H^(ij) beta / h^(i) for a condition on column j.
    Prob lookup(std::uint32_t j, const BetaFn& beta) const {
        const auto& h2 = syn_.pair(agg_, j);
        const bool agg_is_row = h2.row_column == agg_;
        const auto cv = coverage_vector(j, beta, agg_is_row ? h2.col_meta : h2.row_meta, syn_.params);
        const std::size_t k = hist_.size();
        Prob acc = Prob::filled(k, 0.0);
        for (std::size_t r = 0; r < h2.rows(); ++r) {
            for (std::size_t c = 0; c < h2.cols(); ++c) {
                const Count n = h2.at(r, c);
                if (n == 0) continue;
                const std::size_t t = agg_is_row ? h2.row_to_1d[r] : h2.col_to_1d[c];
                const std::size_t x = agg_is_row ? c : r;
                acc.p[t] += static_cast<double>(n) * cv.beta[x];
                acc.lo[t] += static_cast<double>(n) * cv.beta_lo[x];
                acc.hi[t] += static_cast<double>(n) * cv.beta_hi[x];
            }
        }
        for (std::size_t t = 0; t < k; ++t) {
            const double h = static_cast<double>(hist_.bins[t].count);
            for (auto* v : {&acc.p, &acc.lo, &acc.hi}) (*v)[t] = h > 0 ? std::min(1.0, (*v)[t] / h) : 0.0;
        }
        return acc;
    }

    const Synopsis& syn_;
    std::uint32_t agg_;
    const Histogram1D& hist_;
};

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::vector<double> field(std::span<const BinMeta> bins, double BinMeta::*member) {
    std::vector<double> out;
    out.reserve(bins.size());
    for (const auto& b : bins) out.push_back(b.*member);
    return out;
}

void sandwich(AQPResult& r) {
    r.lower = std::min(r.lower, r.estimate);
    r.upper = std::max(r.upper, r.estimate);
}

AQPResult empty_result() {
    AQPResult r;
    r.empty = true;
    return r;
}

double weighted_mean(std::span<const double> w, std::span<const double> x) {
    return dot(w, x) / WeightingsVector::norm(w);
}

// Second moment of x about centre under weights w.
double moment_about(std::span<const double> w, std::span<const double> x, double centre) {
    double acc = 0.0;
    for (std::size_t t = 0; t < w.size(); ++t) acc += w[t] * (x[t] - centre) * (x[t] - centre);
    return acc / WeightingsVector::norm(w);
}

// Bin values narrowed to the integers the predicate admits.
std::vector<BinMeta> clipped_bins(const Histogram1D& hist, const IntervalSet& allowed) {
    std::vector<BinMeta> out = hist.bins;
    for (auto& b : out) {
        if (b.count == 0 || b.v_max == b.v_min) continue;
        const auto hull = allowed.integer_hull(b.v_min, b.v_max);
        if (!hull || (hull->first == b.v_min && hull->second == b.v_max)) continue;
        const double lo = static_cast<double>(b.v_min);
        const double scale = static_cast<double>(hull->second - hull->first) / b.width();
        const double a = static_cast<double>(hull->first);
        b.mid = a + (b.mid - lo) * scale;
        b.c_lo = a + (b.c_lo - lo) * scale;
        b.c_hi = a + (b.c_hi - lo) * scale;
        b.unique = std::min<Count>(b.unique, static_cast<Count>(hull->second - hull->first + 1));
        b.v_min = hull->first;
        b.v_max = hull->second;
    }
    return out;
}

}  // namespace

// ---- IntervalSet

IntervalSet IntervalSet::everything() {
    IntervalSet s;
    s.parts_.push_back({-kInf, kInf, false, false});
    return s;
}

IntervalSet IntervalSet::point(double v) {
    IntervalSet s;
    s.parts_.push_back({v, v, true, true});
    return s;
}

IntervalSet IntervalSet::of(const Condition& c) {
    IntervalSet s;
    const double L = c.literal;
    switch (c.op) {
        case CompareOp::Less: s.parts_.push_back({-kInf, L, false, false}); break;
        case CompareOp::LessEqual: s.parts_.push_back({-kInf, L, false, true}); break;
        case CompareOp::Greater: s.parts_.push_back({L, kInf, false, false}); break;
        case CompareOp::GreaterEqual: s.parts_.push_back({L, kInf, true, false}); break;
        case CompareOp::Equal: return point(L);
        case CompareOp::NotEqual:
            s.parts_.push_back({-kInf, L, false, false});
            s.parts_.push_back({L, kInf, false, false});
            break;
    }
    return s;
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
    IntervalSet out;
    for (const auto& a : parts_) {
        for (const auto& b : other.parts_) {
            Interval x;
            if (a.lo != b.lo) {
                x.lo = std::max(a.lo, b.lo);
                x.lo_closed = a.lo > b.lo ? a.lo_closed : b.lo_closed;
            } else {
                x.lo = a.lo;
                x.lo_closed = a.lo_closed && b.lo_closed;
            }
            if (a.hi != b.hi) {
                x.hi = std::min(a.hi, b.hi);
                x.hi_closed = a.hi < b.hi ? a.hi_closed : b.hi_closed;
            } else {
                x.hi = a.hi;
                x.hi_closed = a.hi_closed && b.hi_closed;
            }
            if (x.lo < x.hi || (x.lo == x.hi && x.lo_closed && x.hi_closed)) out.parts_.push_back(x);
        }
    }
    return out.unite(IntervalSet{});
}

IntervalSet IntervalSet::unite(const IntervalSet& other) const {
    std::vector<Interval> all = parts_;
    all.insert(all.end(), other.parts_.begin(), other.parts_.end());
    std::sort(all.begin(), all.end(), [](const Interval& a, const Interval& b) {
        return a.lo != b.lo ? a.lo < b.lo : (a.lo_closed && !b.lo_closed);
    });
    IntervalSet out;
    for (const auto& x : all) {
        if (!out.parts_.empty()) {
            auto& cur = out.parts_.back();
            if (x.lo < cur.hi || (x.lo == cur.hi && (x.lo_closed || cur.hi_closed))) {
                if (x.hi > cur.hi) {
                    cur.hi = x.hi;
                    cur.hi_closed = x.hi_closed;
                } else if (x.hi == cur.hi) {
                    cur.hi_closed = cur.hi_closed || x.hi_closed;
                }
                continue;
            }
        }
        out.parts_.push_back(x);
    }
    return out;
}

bool IntervalSet::contains(double x) const {
    return std::any_of(parts_.begin(), parts_.end(), [x](const Interval& p) {
        return (x > p.lo || (x == p.lo && p.lo_closed)) && (x < p.hi || (x == p.hi && p.hi_closed));
    });
}

double IntervalSet::measure_within(double a, double b) const {
    double total = 0.0;
    for (const auto& p : parts_) total += std::max(0.0, std::min(p.hi, b) - std::max(p.lo, a));
    return total;
}

std::optional<std::pair<Value, Value>> IntervalSet::integer_hull(Value a, Value b) const {
    std::optional<std::pair<Value, Value>> hull;
    for (const auto& p : parts_) {
        double lo = static_cast<double>(a), hi = static_cast<double>(b);
        if (p.lo > -kInf) lo = std::max(lo, p.lo_closed ? std::ceil(p.lo) : std::floor(p.lo) + 1.0);
        if (p.hi < kInf) hi = std::min(hi, p.hi_closed ? std::floor(p.hi) : std::ceil(p.hi) - 1.0);
        if (lo > hi) continue;
        const auto ilo = static_cast<Value>(lo), ihi = static_cast<Value>(hi);
        if (!hull) hull = std::make_pair(ilo, ihi);
        hull->first = std::min(hull->first, ilo);
        hull->second = std::max(hull->second, ihi);
    }
    return hull;
}

// ---- coverage

double set_coverage(const IntervalSet& set, const BinMeta& bin) {
    if (bin.unique == 0) return 0.0;
    const double lo = static_cast<double>(bin.v_min), hi = static_cast<double>(bin.v_max);
    const bool sat_lo = set.contains(lo), sat_hi = set.contains(hi);
    if (bin.v_min == bin.v_max) return sat_lo ? 1.0 : 0.0;
    if (bin.unique == 2) return (sat_lo + sat_hi) / 2.0;
    const double f = set.measure_within(lo, hi) / (hi - lo);
    // An attained endpoint that passes (or fails) rules out an empty (or full) bin.
    const double inv_u = 1.0 / static_cast<double>(bin.unique);
    const double floor_v = (sat_lo || sat_hi) ? inv_u : 0.0;
    const double ceil_v = (sat_lo && sat_hi) ? 1.0 : 1.0 - inv_u;
    return std::clamp(f, floor_v, ceil_v);
}

std::vector<double> coverage(const Condition& condition, std::span<const BinMeta> bins) {
    std::vector<double> out;
    out.reserve(bins.size());
    for (const auto& b : bins) out.push_back(condition_beta(condition, b));
    return out;
}

std::pair<double, double> analytic_partial_bounds(double h, double s, double a, double b, double chi_crit) {
    const double lo = a == 0.0 ? 0.0 : (a / s) * (1.0 - std::sqrt(chi_crit * (s - a) / (h * a)));
    const double hi = b == 0.0 ? 0.0 : (b / s) * (1.0 + std::sqrt(chi_crit * (s - b) / (h * b)));
    return {lo, hi};
}

std::pair<double, double> coverage_bounds(double beta, Count h, Count unique, std::uint32_t min_points,
                                          double alpha) {
    if (beta <= 0.0) return {0.0, 0.0};
    if (beta >= 1.0) return {1.0, 1.0};
    if (h == 0 || (h >= min_points && unique < 2)) return {beta, beta};
    double lo, hi;
    const double hd = static_cast<double>(h);
    if (h < min_points) {
        lo = 1.0 / hd;
        hi = 1.0 - 1.0 / hd;
    } else {
        const double s = terrell_scott_subbins(unique);
        const double chi = chi_squared_critical(static_cast<std::uint32_t>(s), alpha);
        const double x = beta * s;
        double a = std::floor(x), b = std::ceil(x);
        if (std::fabs(x - std::round(x)) < 1e-9) a = b = std::round(x);
        std::tie(lo, hi) = analytic_partial_bounds(hd, s, a, b, chi);
    }
    lo = std::clamp(lo, 0.0, 1.0);
    hi = std::clamp(hi, 0.0, 1.0);
    return {std::min(lo, beta), std::max(hi, beta)};
}

CoverageVector consolidate_same_column(std::span<const Condition> conditions, Predicate::Kind combinator,
                                       std::span<const BinMeta> bins, const Params& params) {
    if (conditions.empty()) throw InvariantError("empty condition group");
    const auto column = conditions.front().column;
    for (const auto& c : conditions)
        if (c.column != column) throw InvariantError("consolidation across columns");
    const auto beta = group_beta({conditions.begin(), conditions.end()}, combinator);
    return coverage_vector(column, beta, bins, params);
}

// ---- weightings

std::uint32_t aggregation_column(const QueryPlan& plan, const Synopsis& syn) {
    if (plan.agg_column) return *plan.agg_column;
    const auto preds = plan.predicate_columns();
    std::uint32_t best = 0;
    auto key = [&](std::uint32_t c) {
        Count non_null = 0;
        for (const auto& b : syn.hists1d[c].bins) non_null += b.count;
        const bool in_pred = std::binary_search(preds.begin(), preds.end(), c);
        return std::make_tuple(non_null, in_pred, syn.hists1d[c].size());
    };
    for (std::uint32_t c = 1; c < syn.columns.size(); ++c)
        if (key(c) > key(best)) best = c;
    return best;
}

WeightingsVector weightings(const QueryPlan& plan, const Synopsis& syn, const QueryOptions& options) {
    const auto i = aggregation_column(plan, syn);
    const auto& hist = syn.hists1d[i];
    const std::size_t k = hist.size();
    Prob pr = plan.predicate ? Evaluator(syn, i).eval(*plan.predicate) : Prob::filled(k, 1.0);

    WeightingsVector w;
    w.column = i;
    const auto& P = syn.params;
    const double fpc = P.samples < P.rows
                           ? static_cast<double>(P.rows - P.samples) / static_cast<double>(P.rows - 1)
                           : 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        const double h = static_cast<double>(hist.bins[t].count);
        double wt = pr.p[t] * h, lo = std::min(pr.lo[t], pr.p[t]) * h, hi = std::max(pr.hi[t], pr.p[t]) * h;
        if (fpc > 0.0 && h > 0.0) {
            auto radical = [&](double x) {
                const double b = x / h;
                double r = AggregationWork::z98 * std::sqrt(std::max(0.0, b * (1.0 - b)) * fpc);
                return options.widening == Widening::BinomialCount ? r * std::sqrt(h) : r;
            };
            lo -= radical(lo);
            hi += radical(hi);
        }
        w.w.push_back(wt);
        w.w_lo.push_back(std::clamp(lo, 0.0, wt));
        w.w_hi.push_back(std::clamp(hi, wt, h));
    }
    return w;
}

// ---- aggregates

AQPResult estimate_count(const WeightingsVector& w, double rho) {
    AQPResult r;
    r.estimate = WeightingsVector::norm(w.w) / rho;
    r.lower = WeightingsVector::norm(w.w_lo) / rho;
    r.upper = WeightingsVector::norm(w.w_hi) / rho;
    sandwich(r);
    return r;
}

AQPResult estimate_sum(const WeightingsVector& w, std::span<const BinMeta> bins, const ColumnSpec& spec,
                       double rho) {
    if (!spec.numeric()) throw QueryError("SUM undefined for categorical");
    AQPResult r;
    for (std::size_t t = 0; t < bins.size(); ++t) {
        const double c = spec.decode(bins[t].mid);
        const double clo = spec.decode(bins[t].c_lo);
        const double chi = spec.decode(bins[t].c_hi);
        r.estimate += w.w[t] * c;
        // Sign-safe pairing of weight and centre extremes.
        r.lower += std::min(w.w_lo[t] * clo, w.w_hi[t] * clo);
        r.upper += std::max(w.w_hi[t] * chi, w.w_lo[t] * chi);
    }
    r.estimate /= rho;
    r.lower /= rho;
    r.upper /= rho;
    sandwich(r);
    return r;
}

AQPResult estimate_avg(const WeightingsVector& w, std::span<const BinMeta> bins, const ColumnSpec& spec) {
    if (!spec.numeric()) throw QueryError("AVG undefined for categorical");
    if (WeightingsVector::norm(w.w) <= 0.0) return empty_result();
    const auto c = field(bins, &BinMeta::mid);
    const auto clo = field(bins, &BinMeta::c_lo);
    const auto chi = field(bins, &BinMeta::c_hi);
    AQPResult r;
    r.estimate = weighted_mean(w.w, c);
    r.lower = kInf;
    r.upper = -kInf;
    for (const auto* wb : {&w.w_lo, &w.w_hi}) {
        if (WeightingsVector::norm(*wb) <= 0.0) continue;
        r.lower = std::min(r.lower, weighted_mean(*wb, clo));
        r.upper = std::max(r.upper, weighted_mean(*wb, chi));
    }
    sandwich(r);
    r.estimate = spec.decode(r.estimate);
    r.lower = spec.decode(r.lower);
    r.upper = spec.decode(r.upper);
    return r;
}

AQPResult estimate_extremum(Aggregate kind, const WeightingsVector& w, std::span<const BinMeta> bins,
                            const ColumnSpec& spec, bool single_column, const Params& params, Value column_min,
                            Value column_max, AggregationWork* work) {
    if (kind != Aggregate::Min && kind != Aggregate::Max) throw InvariantError("extremum needs MIN or MAX");
    if (!spec.numeric()) throw QueryError(std::string(to_string(kind)) + " undefined for categorical");
    const bool is_min = kind == Aggregate::Min;
    const std::size_t k = bins.size();
    // First (MIN) or last (MAX) bin whose weight passes the threshold.
    auto pick = [&](const std::vector<double>& v, double threshold) -> std::optional<std::size_t> {
        for (std::size_t n = 0; n < k; ++n) {
            const std::size_t t = is_min ? n : k - 1 - n;
            if (v[t] > threshold) return t;
        }
        return std::nullopt;
    };
    const auto t_star = pick(w.w, 0.0);
    if (!t_star) return empty_result();
    AggregationWork local;
    AggregationWork& wk = work ? *work : local;
    wk.t_star = t_star;

    auto near_end = [&](const BinMeta& b) { return static_cast<double>(is_min ? b.v_min : b.v_max); };
    auto far_end = [&](const BinMeta& b) { return static_cast<double>(is_min ? b.v_max : b.v_min); };
    const auto& bs = bins[*t_star];
    const bool two_values = single_column && bs.unique == 2;

    AQPResult r;
    r.estimate = two_values && w.w[*t_star] < static_cast<double>(bs.count) / 2.0 ? far_end(bs) : near_end(bs);

    // Loose side: any bin that might hold a match.
    const auto t_loose = pick(w.w_hi, 0.0).value_or(*t_star);
    const auto& bl = bins[t_loose];
    const double loose = single_column && bl.unique == 2 && w.w_hi[t_loose] < static_cast<double>(bl.count) / 5.0
                             ? far_end(bl)
                             : near_end(bl);

    // Tight side: a bin that almost surely holds a match.
    double tight = static_cast<double>(is_min ? column_max : column_min);
    if (const auto t_sure = pick(w.w_lo, 0.5)) {
        const auto& b = bins[*t_sure];
        tight = far_end(b);
        if (single_column && b.unique > 2 && b.count > params.min_points) {
            wk.s = terrell_scott_subbins(b.unique);
            wk.width = b.width();
            wk.delta = wk.width / wk.s;
            wk.a = static_cast<std::uint32_t>(std::floor(wk.s * w.w_lo[*t_sure] / static_cast<double>(b.count)));
            tight += (is_min ? -1.0 : 1.0) * wk.a * wk.delta;
        }
    }
    r.lower = is_min ? loose : tight;
    r.upper = is_min ? tight : loose;
    sandwich(r);
    r.estimate = spec.decode(r.estimate);
    r.lower = spec.decode(r.lower);
    r.upper = spec.decode(r.upper);
    return r;
}

namespace {

// First bin where the running share of v reaches one half.
std::optional<std::size_t> median_bin(std::span<const double> v) {
    const double total = WeightingsVector::norm(v);
    if (total <= 0.0) return std::nullopt;
    double cum = 0.0;
    for (std::size_t t = 0; t < v.size(); ++t) {
        cum += v[t];
        if (cum >= total / 2.0 * (1.0 - 1e-12) && v[t] > 0.0) return t;
    }
    return v.size() - 1;
}

}  // namespace

AQPResult estimate_median(const WeightingsVector& w, std::span<const BinMeta> bins, const ColumnSpec& spec,
                          AggregationWork* work) {
    if (!spec.numeric()) throw QueryError("MEDIAN undefined for categorical");
    const auto t_star = median_bin(w.w);
    if (!t_star) return empty_result();
    const double total = WeightingsVector::norm(w.w);
    double before = 0.0;
    for (std::size_t t = 0; t < *t_star; ++t) before += w.w[t];
    const auto& b = bins[*t_star];
    const double f = std::clamp((total / 2.0 - before) / w.w[*t_star], 0.0, 1.0);
    AQPResult r;
    if (b.unique == 2)
        r.estimate = static_cast<double>(f < 0.5 ? b.v_min : b.v_max);
    else
        r.estimate = static_cast<double>(b.v_min) + b.width() * f;
    std::size_t lo_bin = *t_star, hi_bin = *t_star;
    for (const auto* wb : {&w.w_lo, &w.w_hi}) {
        if (const auto t = median_bin(*wb)) {
            lo_bin = std::min(lo_bin, *t);
            hi_bin = std::max(hi_bin, *t);
        }
    }
    r.lower = static_cast<double>(bins[lo_bin].v_min);
    r.upper = static_cast<double>(bins[hi_bin].v_max);
    if (work) {
        work->t_star = t_star;
        work->f = f;
    }
    sandwich(r);
    r.estimate = spec.decode(r.estimate);
    r.lower = spec.decode(r.lower);
    r.upper = spec.decode(r.upper);
    return r;
}

AQPResult estimate_var(const WeightingsVector& w, std::span<const BinMeta> bins, const ColumnSpec& spec,
                       AggregationWork* work) {
    if (!spec.numeric()) throw QueryError("VAR undefined for categorical");
    if (WeightingsVector::norm(w.w) <= 0.0) return empty_result();
    const auto c = field(bins, &BinMeta::mid);
    const double mean = weighted_mean(w.w, c);
    std::vector<double> xi_lo, xi_hi;
    for (const auto& b : bins) {
        const double lo = static_cast<double>(b.v_min), hi = static_cast<double>(b.v_max);
        xi_lo.push_back(hi < mean ? hi : lo > mean ? lo : mean);
        xi_hi.push_back(std::fabs(mean - lo) > std::fabs(hi - mean) ? lo : hi);
    }
    AQPResult r;
    r.estimate = moment_about(w.w, c, mean);
    r.lower = kInf;
    r.upper = -kInf;
    for (const auto* wb : {&w.w_lo, &w.w_hi}) {
        if (WeightingsVector::norm(*wb) <= 0.0) continue;
        r.lower = std::min(r.lower, moment_about(*wb, xi_lo, weighted_mean(*wb, xi_lo)));
        // About the estimated mean rather than the representatives' own mean.
        r.upper = std::max(r.upper, moment_about(*wb, xi_hi, mean));
    }
    r.lower = std::max(0.0, r.lower);
    sandwich(r);
    if (work) {
        work->xi_lo = std::move(xi_lo);
        work->xi_hi = std::move(xi_hi);
    }
    const double s2 = static_cast<double>(spec.scale) * static_cast<double>(spec.scale);
    r.estimate /= s2;
    r.lower /= s2;
    r.upper /= s2;
    return r;
}

// ---- execution

namespace {

AQPResult execute_one(const QueryPlan& plan, const Synopsis& syn, const QueryOptions& options) {
    const auto i = aggregation_column(plan, syn);
    const auto w = weightings(plan, syn, options);
    const auto& hist = syn.hists1d[i];
    const auto& spec = syn.columns[i];
    if (plan.aggregate == Aggregate::Count) return estimate_count(w, syn.params.rho());

    std::vector<BinMeta> bins = hist.bins;
    if (options.clip_to_predicate && plan.predicate)
        bins = clipped_bins(hist, Evaluator(syn, i).admissible(*plan.predicate));
    const auto cols = plan.predicate_columns();
    const bool single = std::all_of(cols.begin(), cols.end(), [i](auto c) { return c == i; });

    switch (plan.aggregate) {
        case Aggregate::Sum: return estimate_sum(w, bins, spec, syn.params.rho());
        case Aggregate::Avg: return estimate_avg(w, bins, spec);
        case Aggregate::Min:
        case Aggregate::Max: {
            Value lo = 0, hi = 0;
            bool seen = false;
            for (const auto& b : hist.bins) {
                if (b.count == 0) continue;
                lo = seen ? std::min(lo, b.v_min) : b.v_min;
                hi = seen ? std::max(hi, b.v_max) : b.v_max;
                seen = true;
            }
            return estimate_extremum(plan.aggregate, w, bins, spec, single, syn.params, lo, hi);
        }
        case Aggregate::Median: return estimate_median(w, bins, spec);
        case Aggregate::Var: return estimate_var(w, bins, spec);
        case Aggregate::Count: break;
    }
    throw InvariantError("unhandled aggregate");
}

}  // namespace

AQPResult execute(const QueryPlan& plan, const Synopsis& syn, const QueryOptions& options) {
    AQPResult result = execute_one(plan, syn, options);
    if (!plan.group_by) return result;
    const auto g = *plan.group_by;
    const auto& spec = syn.columns[g];
    for (std::size_t rank = 0; rank < spec.categories.size(); ++rank) {
        Condition c;
        c.column = g;
        c.op = CompareOp::Equal;
        c.literal = static_cast<double>(rank);
        QueryPlan sub = plan;
        sub.group_by.reset();
        auto leaf = Predicate::leaf(c);
        if (plan.predicate) {
            std::vector<Predicate> both{*plan.predicate, leaf};
            sub.predicate = Predicate::node(Predicate::Kind::And, std::move(both));
        } else {
            sub.predicate = leaf;
        }
        const auto r = execute_one(sub, syn, options);
        result.groups.push_back({spec.categories[rank], r.estimate, r.lower, r.upper, r.empty});
    }
    return result;
}

AQPResult run_query(std::string_view sql, const Synopsis& syn, const QueryOptions& options) {
    return execute(parse_query(sql, syn), syn, options);
}

}  // namespace pwh
