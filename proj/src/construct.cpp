#include "pwh/construct.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "pwh/error.hpp"
#include "pwh/stats.hpp"

namespace pwh {
namespace {

Count count_unique_sorted(std::span<const Value> v) {
    if (v.empty()) return 0;
    Count u = 1;
    for (std::size_t k = 1; k < v.size(); ++k) u += v[k] != v[k - 1];
    return u;
}

// Floor midpoint of the representable extent.
Value split_point(Value eL, Value eR, bool closed) {
    return eL + (eR - eL + (closed ? 1 : 0)) / 2;
}

void refine_sorted(Value eL, Value eR, bool closed, std::span<const Value> v, std::uint32_t min_points,
                   double alpha, RefineResult1D& out) {
    auto emit = [&](Value lo, Value hi, Count u) {
        out.upper_edges.push_back(eR);
        out.v_mins.push_back(lo);
        out.v_maxs.push_back(hi);
        out.uniques.push_back(u);
        out.counts.push_back(v.size());
    };
    if (v.empty()) return emit(eL, eR, 0);
    if (v.front() == v.back()) return emit(v.front(), v.front(), 1);
    const Count u = count_unique_sorted(v);
    if (v.size() < min_points || is_uniform(v, eL, eR, u, alpha, closed))
        return emit(v.front(), v.back(), u);
    const Value z = split_point(eL, eR, closed);
    if (z <= eL) return emit(v.front(), v.back(), u);
    const auto cut = static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), z) - v.begin());
    refine_sorted(eL, z, false, v.first(cut), min_points, alpha, out);
    refine_sorted(z, eR, closed, v.subspan(cut), min_points, alpha, out);
}

struct DimTest {
    bool fails = false;
    double stat = 0.0;
};

template <class Coord>
DimTest test_dimension(std::span<const Point2> pts, Coord coord, Value eL, Value eR, bool closed, double alpha) {
    std::vector<Value> v;
    v.reserve(pts.size());
    for (const auto& p : pts) v.push_back(coord(p));
    std::sort(v.begin(), v.end());
    const Count u = count_unique_sorted(v);
    if (u < 2) return {};
    const auto s = terrell_scott_subbins(u);
    const double stat = chi_squared_statistic(v, eL, eR - eL + (closed ? 1 : 0), s);
    return {stat > chi_squared_critical(s, alpha), stat};
}

void refine_2d(Value eLi, Value eRi, bool ci, Value eLj, Value eRj, bool cj, std::span<Point2> pts,
               std::uint32_t min_points, double alpha, NewEdges2D& out) {
    if (pts.size() <= min_points) return;
    const auto ti = test_dimension(pts, [](const Point2& p) { return p.x; }, eLi, eRi, ci, alpha);
    const auto tj = test_dimension(pts, [](const Point2& p) { return p.y; }, eLj, eRj, cj, alpha);
    if (!ti.fails && !tj.fails) return;
    // Least uniform failing dimension.
    const bool split_row = ti.fails && (!tj.fails || ti.stat >= tj.stat);
    if (split_row) {
        const Value z = split_point(eLi, eRi, ci);
        out.row.push_back(z);
        auto mid = std::partition(pts.begin(), pts.end(), [z](const Point2& p) { return p.x < z; });
        const auto cut = static_cast<std::size_t>(mid - pts.begin());
        refine_2d(eLi, z, false, eLj, eRj, cj, pts.first(cut), min_points, alpha, out);
        refine_2d(z, eRi, ci, eLj, eRj, cj, pts.subspan(cut), min_points, alpha, out);
    } else {
        const Value z = split_point(eLj, eRj, cj);
        out.col.push_back(z);
        auto mid = std::partition(pts.begin(), pts.end(), [z](const Point2& p) { return p.y < z; });
        const auto cut = static_cast<std::size_t>(mid - pts.begin());
        refine_2d(eLi, eRi, ci, eLj, z, false, pts.first(cut), min_points, alpha, out);
        refine_2d(eLi, eRi, ci, z, eRj, cj, pts.subspan(cut), min_points, alpha, out);
    }
}

void sort_unique(std::vector<Value>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::span<const Value> slice(std::span<const Value> sorted, Value lo, Value hi, bool closed) {
    auto b = std::lower_bound(sorted.begin(), sorted.end(), lo);
    auto e = closed ? std::upper_bound(b, sorted.end(), hi) : std::lower_bound(b, sorted.end(), hi);
    return {b, e};
}

// Edges seeded from a provider, trimmed to the sample range and thinned.
std::vector<Value> initial_edges(const std::optional<std::vector<Value>>& provided, Value lo, Value hi,
                                 std::size_t target) {
    std::vector<Value> inner;
    if (provided) {
        for (Value e : *provided)
            if (e > lo && e < hi) inner.push_back(e);
        sort_unique(inner);
        if (target > 0 && inner.size() > target) {
            const std::size_t step = (inner.size() + target - 1) / target;
            std::vector<Value> kept;
            for (std::size_t k = 0; k < inner.size(); k += step) kept.push_back(inner[k]);
            inner = std::move(kept);
        }
    }
    std::vector<Value> edges{lo};
    edges.insert(edges.end(), inner.begin(), inner.end());
    edges.push_back(hi);
    return edges;
}

Histogram1D build_1d(std::uint32_t column, std::span<const Value> sorted, const Params& params,
                     const std::optional<std::vector<Value>>& provided) {
    Histogram1D hist;
    hist.column = column;
    if (sorted.empty()) {
        hist.edges = {0, 0};
        hist.bins = {BinMeta{}};
        return hist;
    }
    const std::size_t target = (params.samples + params.min_points - 1) / params.min_points;
    const auto init = initial_edges(provided, sorted.front(), sorted.back(), target);
    RefineResult1D r;
    for (std::size_t t = 0; t + 1 < init.size(); ++t) {
        const bool closed = t + 2 == init.size();
        refine_sorted(init[t], init[t + 1], closed, slice(sorted, init[t], init[t + 1], closed),
                      params.min_points, params.alpha, r);
    }
    hist.edges.push_back(init.front());
    hist.edges.insert(hist.edges.end(), r.upper_edges.begin(), r.upper_edges.end());
    for (std::size_t t = 0; t < r.upper_edges.size(); ++t) {
        BinMeta b;
        b.v_min = r.v_mins[t];
        b.v_max = r.v_maxs[t];
        b.unique = r.uniques[t];
        b.count = r.counts[t];
        hist.bins.push_back(b);
    }
    return hist;
}

// Per-piece min, max and unique count over all sampled values of the column.
std::vector<BinMeta> piece_meta(std::span<const Value> edges, std::span<const Value> sorted) {
    std::vector<BinMeta> out(edges.size() - 1);
    for (std::size_t r = 0; r < out.size(); ++r) {
        const bool closed = r + 1 == out.size();
        auto v = slice(sorted, edges[r], edges[r + 1], closed);
        if (r == 0 && !v.empty() && v.front() < edges[0]) throw InvariantError("value below first edge");
        if (v.empty()) {
            out[r].v_min = edges[r];
            out[r].v_max = edges[r + 1];
        } else {
            out[r].v_min = v.front();
            out[r].v_max = v.back();
            out[r].unique = count_unique_sorted(v);
        }
    }
    return out;
}

Histogram2D build_2d(std::uint32_t i, std::uint32_t j, const Histogram1D& hi, const Histogram1D& hj,
                     std::span<const Value> si, std::span<const Value> sj, std::span<const Value> sorted_i,
                     std::span<const Value> sorted_j, const Table& table, const Params& params) {
    Histogram2D h;
    h.row_column = i;
    h.col_column = j;
    const auto& nci = table.specs[i].null_code;
    const auto& ncj = table.specs[j].null_code;
    std::vector<Point2> pts;
    pts.reserve(si.size());
    for (std::size_t r = 0; r < si.size(); ++r) {
        if ((nci && si[r] == *nci) || (ncj && sj[r] == *ncj)) continue;
        pts.push_back({si[r], sj[r]});
    }

    const std::size_t ki = hi.size(), kj = hj.size();
    std::vector<std::size_t> start(ki * kj + 1, 0);
    std::vector<std::uint32_t> cell(pts.size());
    for (std::size_t p = 0; p < pts.size(); ++p) {
        cell[p] = static_cast<std::uint32_t>(hi.find(pts[p].x) * kj + hj.find(pts[p].y));
        ++start[cell[p] + 1];
    }
    for (std::size_t c = 0; c < ki * kj; ++c) start[c + 1] += start[c];
    std::vector<Point2> grouped(pts.size());
    {
        auto fill = start;
        for (std::size_t p = 0; p < pts.size(); ++p) grouped[fill[cell[p]]++] = pts[p];
    }

    NewEdges2D added;
    for (std::size_t c = 0; c < ki * kj; ++c) {
        const std::size_t n = start[c + 1] - start[c];
        if (n <= params.min_points) continue;
        const std::size_t bi = c / kj, bj = c % kj;
        std::span<Point2> cell_pts(grouped.data() + start[c], n);
        refine_2d(hi.edges[bi], hi.edges[bi + 1], bi + 1 == ki, hj.edges[bj], hj.edges[bj + 1], bj + 1 == kj,
                  cell_pts, params.min_points, params.alpha, added);
    }
    h.row_edges = hi.edges;
    h.row_edges.insert(h.row_edges.end(), added.row.begin(), added.row.end());
    h.col_edges = hj.edges;
    h.col_edges.insert(h.col_edges.end(), added.col.begin(), added.col.end());
    // Degenerate {v, v} edges of a constant column stay as they are.
    if (hi.size() > 1 || hi.edges[0] != hi.edges[1]) sort_unique(h.row_edges);
    if (hj.size() > 1 || hj.edges[0] != hj.edges[1]) sort_unique(h.col_edges);

    h.row_meta = piece_meta(h.row_edges, sorted_i);
    h.col_meta = piece_meta(h.col_edges, sorted_j);
    h.counts.assign(h.rows() * h.cols(), 0);
    for (const auto& p : pts) {
        const auto r = find_bin(h.row_edges, p.x);
        const auto c = find_bin(h.col_edges, p.y);
        ++h.counts[r * h.cols() + c];
        ++h.row_meta[r].count;
        ++h.col_meta[c].count;
    }
    return h;
}

void fill_derived(BinMeta& b, const Params& params) {
    if (b.count == 0) {
        b.mid = b.c_lo = b.c_hi = (static_cast<double>(b.v_min) + static_cast<double>(b.v_max)) / 2.0;
        return;
    }
    b.mid = derive_bin_midpoint(b);
    const auto cb = weighted_centre_bounds(b.count, b.v_min, b.v_max, std::max<Count>(b.unique, 1),
                                           params.min_points, params.alpha);
    b.c_lo = cb.lo;
    b.c_hi = cb.hi;
}

}  // namespace

RefineResult1D refine_bin_1d(Value eL, Value eR, std::span<const Value> values, std::uint32_t min_points,
                             double alpha, bool closed_upper) {
    if (closed_upper ? eL > eR : eL >= eR) throw InputError("degenerate bin");
    std::vector<Value> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    if (!sorted.empty() && (sorted.front() < eL || sorted.back() > eR || (!closed_upper && sorted.back() == eR)))
        throw InputError("values fall outside the bin");
    RefineResult1D out;
    refine_sorted(eL, eR, closed_upper, sorted, min_points, alpha, out);
    return out;
}

NewEdges2D refine_bin_2d(Value eLi, Value eRi, Value eLj, Value eRj, std::span<const Point2> points,
                         std::uint32_t min_points, double alpha, bool closed_i, bool closed_j) {
    std::vector<Point2> pts(points.begin(), points.end());
    NewEdges2D out;
    refine_2d(eLi, eRi, closed_i, eLj, eRj, closed_j, pts, min_points, alpha, out);
    sort_unique(out.row);
    sort_unique(out.col);
    return out;
}

CentreBounds analytic_centre_bounds(double h, double v_min, double v_max, Count unique, double chi_crit) {
    const double s = terrell_scott_subbins(unique);
    const double delta = (v_max - v_min) / s;
    const double radical = delta / 6.0 * std::sqrt(3.0 * chi_crit * (s * s - 1.0) / h);
    return {v_min + (s - 1.0) * delta / 2.0 - radical, v_min + (s + 1.0) * delta / 2.0 + radical};
}

CentreBounds weighted_centre_bounds(Count h, Value v_min, Value v_max, Count unique, std::uint32_t min_points,
                                    double alpha, Value quantum) {
    if (h == 0) throw InputError("empty bin");
    if (unique == 0) throw InputError("non-empty bin needs a unique count");
    const double lo_v = static_cast<double>(v_min), hi_v = static_cast<double>(v_max);
    CentreBounds cb;
    if (h < min_points) {
        const double shift = static_cast<double>(unique - 1) * static_cast<double>(unique) *
                             static_cast<double>(quantum) / (2.0 * static_cast<double>(h));
        cb = {lo_v + shift, hi_v - shift};
    } else if (unique < 2) {
        cb = {lo_v, hi_v};
    } else {
        const auto s = terrell_scott_subbins(unique);
        cb = analytic_centre_bounds(static_cast<double>(h), lo_v, hi_v, unique, chi_squared_critical(s, alpha));
    }
    const double mid = (lo_v + hi_v) / 2.0;
    return {std::clamp(cb.lo, lo_v, mid), std::clamp(cb.hi, mid, hi_v)};
}

std::vector<std::size_t> draw_sample(std::size_t rows, std::size_t samples, std::uint64_t seed) {
    if (samples > rows) throw InputError("sample size exceeds row count");
    std::vector<std::size_t> out;
    out.reserve(samples);
    if (samples == rows) {
        for (std::size_t r = 0; r < rows; ++r) out.push_back(r);
        return out;
    }
    // Selection sampling: keeps each row with probability needed / remaining.
    std::mt19937_64 rng(seed);
    std::size_t needed = samples;
    for (std::size_t r = 0; r < rows && needed > 0; ++r) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        if (u * static_cast<double>(rows - r) < static_cast<double>(needed)) {
            out.push_back(r);
            --needed;
        }
    }
    return out;
}

Synopsis build_pairwise_hist(const Table& table, Params params, const BuildOptions& options) {
    if (table.specs.size() != table.columns.size()) throw InputError("table specs and columns disagree");
    for (const auto& c : table.columns)
        if (c.size() != table.rows()) throw InputError("ragged table columns");
    params.rows = table.rows();
    params.columns = static_cast<std::uint32_t>(table.specs.size());
    if (params.samples > params.rows) throw InputError("sample size exceeds row count");
    params.validate();

    const std::size_t d = table.specs.size();
    const auto rows = draw_sample(params.rows, params.samples, options.seed);

    std::vector<std::vector<Value>> sampled(d), sorted(d);
    parallel_for(d, options.threads, [&](std::size_t c) {
        sampled[c].reserve(rows.size());
        for (auto r : rows) sampled[c].push_back(table.columns[c][r]);
        for (auto v : sampled[c])
            if (!table.specs[c].null_code || v != *table.specs[c].null_code) sorted[c].push_back(v);
        std::sort(sorted[c].begin(), sorted[c].end());
    });

    Synopsis syn;
    syn.params = params;
    syn.columns = table.specs;
    for (std::size_t c = 0; c < d; ++c) syn.columns[c].id = static_cast<std::uint32_t>(c);
    syn.hists1d.resize(d);
    parallel_for(d, options.threads, [&](std::size_t c) {
        static const std::optional<std::vector<Value>> none;
        const auto& provided = c < options.initial_edges.size() ? options.initial_edges[c] : none;
        syn.hists1d[c] = build_1d(static_cast<std::uint32_t>(c), sorted[c], params, provided);
    });

    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (std::uint32_t i = 0; i < d; ++i)
        for (std::uint32_t j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
    syn.hists2d.resize(pairs.size());
    parallel_for(pairs.size(), options.threads, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        syn.hists2d[p] = build_2d(i, j, syn.hists1d[i], syn.hists1d[j], sampled[i], sampled[j], sorted[i],
                                  sorted[j], table, params);
    });
    derive_metadata(syn);
    return syn;
}

void derive_metadata(Synopsis& syn) {
    for (auto& c : syn.columns) c.rebuild_index();
    for (auto& h : syn.hists1d)
        for (auto& b : h.bins) fill_derived(b, syn.params);
    for (auto& h : syn.hists2d) {
        for (auto& b : h.row_meta) fill_derived(b, syn.params);
        for (auto& b : h.col_meta) fill_derived(b, syn.params);
        const auto& hi = syn.hists1d[h.row_column];
        const auto& hj = syn.hists1d[h.col_column];
        h.row_to_1d.clear();
        h.col_to_1d.clear();
        for (std::size_t r = 0; r < h.rows(); ++r)
            h.row_to_1d.push_back(static_cast<std::uint32_t>(hi.find(h.row_edges[r])));
        for (std::size_t c = 0; c < h.cols(); ++c)
            h.col_to_1d.push_back(static_cast<std::uint32_t>(hj.find(h.col_edges[c])));
    }
}

LeafAudit audit_leaves(const Synopsis& syn, const Table& table, std::uint64_t seed) {
    LeafAudit audit;
    const auto rows = draw_sample(table.rows(), syn.params.samples, seed);
    for (std::size_t c = 0; c < syn.hists1d.size(); ++c) {
        std::vector<Value> v;
        for (auto r : rows)
            if (!table.is_null(c, r)) v.push_back(table.columns[c][r]);
        std::sort(v.begin(), v.end());
        const auto& hist = syn.hists1d[c];
        Count total = 0;
        for (std::size_t t = 0; t < hist.size(); ++t) {
            ++audit.bins_checked;
            const bool closed = t + 1 == hist.size();
            auto in_bin = slice(v, hist.edges[t], hist.edges[t + 1], closed);
            const auto where = "column " + std::to_string(c) + " bin " + std::to_string(t);
            total += in_bin.size();
            if (in_bin.size() != hist.bins[t].count) {
                audit.violations.push_back(where + ": stored count disagrees with the sample");
                continue;
            }
            if (!in_bin.empty() && (in_bin.front() != hist.bins[t].v_min || in_bin.back() != hist.bins[t].v_max))
                audit.violations.push_back(where + ": min/max not attained");
            const Count u = count_unique_sorted(in_bin);
            if (in_bin.size() >= syn.params.min_points && u >= 2 &&
                !is_uniform(in_bin, hist.edges[t], hist.edges[t + 1], u, syn.params.alpha, closed))
                audit.violations.push_back(where + ": fails the uniformity test with h >= M");
        }
        if (total != v.size()) audit.violations.push_back("column " + std::to_string(c) + ": counts do not sum");
    }
    return audit;
}

}  // namespace pwh
