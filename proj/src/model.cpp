#include "pwh/model.hpp"

#include <algorithm>
#include <numeric>

#include "pwh/error.hpp"

namespace pwh {

void Params::validate() const {
    if (samples == 0 || samples > rows)
        throw InputError("sample size must satisfy 0 < Ns <= N");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    if (min_points < 2 || min_points > samples)
        throw InputError("min points must satisfy 1 < M <= Ns");
    if (columns == 0) throw InputError("synopsis needs at least one column");
}

std::string_view to_string(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::Integer: return "integer";
        case ColumnKind::Decimal: return "decimal";
        case ColumnKind::Categorical: return "categorical";
        case ColumnKind::Datetime: return "datetime";
    }
    return "?";
}

std::string_view to_string(Aggregate agg) {
    switch (agg) {
        case Aggregate::Count: return "COUNT";
        case Aggregate::Sum: return "SUM";
        case Aggregate::Avg: return "AVG";
        case Aggregate::Min: return "MIN";
        case Aggregate::Max: return "MAX";
        case Aggregate::Median: return "MEDIAN";
        case Aggregate::Var: return "VAR";
    }
    return "?";
}

std::string_view to_string(CompareOp op) {
    switch (op) {
        case CompareOp::Less: return "<";
        case CompareOp::Greater: return ">";
        case CompareOp::LessEqual: return "<=";
        case CompareOp::GreaterEqual: return ">=";
        case CompareOp::Equal: return "=";
        case CompareOp::NotEqual: return "!=";
    }
    return "?";
}

std::optional<Value> ColumnSpec::rank_of(std::string_view label) const {
    if (rank_index_.size() != categories.size()) {
        auto it = std::find(categories.begin(), categories.end(), label);
        if (it == categories.end()) return std::nullopt;
        return static_cast<Value>(it - categories.begin());
    }
    auto it = rank_index_.find(std::string(label));
    if (it == rank_index_.end()) return std::nullopt;
    return it->second;
}

void ColumnSpec::rebuild_index() {
    rank_index_.clear();
    for (std::size_t r = 0; r < categories.size(); ++r)
        rank_index_.emplace(categories[r], static_cast<Value>(r));
}

double derive_bin_midpoint(const BinMeta& meta) {
    if (meta.count == 0) throw InputError("empty bin has no midpoint");
    return (static_cast<double>(meta.v_min) + static_cast<double>(meta.v_max)) / 2.0;
}

std::size_t find_bin(std::span<const Value> edges, Value v) {
    if (edges.size() < 2) throw InvariantError("edge vector needs at least two entries");
    auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, v);
    return static_cast<std::size_t>(it - (edges.begin() + 1));
}

std::size_t Synopsis::pair_index(std::size_t i, std::size_t j, std::size_t d) {
    if (i > j) std::swap(i, j);
    if (i == j || j >= d) throw InvariantError("no 2-d histogram for this column pair");
    // Pairs preceding row i, then the offset within the row.
    return i * d - i * (i + 1) / 2 + (j - i - 1);
}

const Histogram2D& Synopsis::pair(std::size_t i, std::size_t j) const {
    auto idx = pair_index(i, j, columns.size());
    if (idx >= hists2d.size()) throw InvariantError("missing 2-d histogram");
    return hists2d[idx];
}

std::optional<std::uint32_t> Synopsis::column_index(std::string_view name) const {
    for (const auto& c : columns)
        if (c.name == name) return c.id;
    return std::nullopt;
}

double WeightingsVector::norm(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0);
}

bool Condition::matches(double x) const {
    switch (op) {
        case CompareOp::Less: return x < literal;
        case CompareOp::Greater: return x > literal;
        case CompareOp::LessEqual: return x <= literal;
        case CompareOp::GreaterEqual: return x >= literal;
        case CompareOp::Equal: return x == literal;
        case CompareOp::NotEqual: return x != literal;
    }
    return false;
}

Predicate Predicate::node(Kind kind, std::vector<Predicate> children) {
    if (kind == Kind::Leaf) throw InvariantError("leaf passed as combinator");
    if (children.size() == 1) return std::move(children.front());
    Predicate out{kind, {}, {}};
    for (auto& c : children) {
        // Same-kind nesting is associative; flatten it.
        if (c.kind == kind) {
            for (auto& g : c.children) out.children.push_back(std::move(g));
        } else {
            out.children.push_back(std::move(c));
        }
    }
    return out;
}

void Predicate::collect_columns(std::vector<std::uint32_t>& out) const {
    if (kind == Kind::Leaf) {
        out.push_back(condition.column);
        return;
    }
    for (const auto& c : children) c.collect_columns(out);
}

std::vector<std::uint32_t> QueryPlan::predicate_columns() const {
    std::vector<std::uint32_t> cols;
    if (predicate) predicate->collect_columns(cols);
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    return cols;
}

}  // namespace pwh
