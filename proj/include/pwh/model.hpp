#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pwh {

// A value in the encoded (non-negative integer) domain.
using Value = std::int64_t;
using Count = std::uint64_t;

struct Params {
    Count rows = 0;     // N
    Count samples = 0;  // Ns
    std::uint32_t min_points = 0;  // M
    double alpha = 0.001;
    std::uint32_t columns = 0;  // d

    double rho() const { return static_cast<double>(samples) / static_cast<double>(rows); }
    void validate() const;
    bool operator==(const Params&) const = default;
};

enum class ColumnKind : std::uint8_t { Integer = 0, Decimal = 1, Categorical = 2, Datetime = 3 };

std::string_view to_string(ColumnKind kind);

struct ColumnSpec {
    std::string name;
    std::uint32_t id = 0;
    ColumnKind kind = ColumnKind::Integer;
    // Subtracted after scaling, so it lives in scaled units.
    std::int64_t offset = 0;
    std::int64_t scale = 1;
    std::vector<std::string> categories;  // label of rank r at index r
    std::optional<Value> null_code;
    std::uint8_t byte_depth = 1;

    static constexpr Value quantum = 1;

    bool numeric() const { return kind != ColumnKind::Categorical; }
    std::optional<Value> rank_of(std::string_view label) const;
    // Encoded value back to raw units (numeric kinds; ranks for categoricals).
    double decode(double encoded) const {
        return (encoded + static_cast<double>(offset)) / static_cast<double>(scale);
    }
    // Inverse of decode without rounding; used for predicate literals.
    double encode(double raw) const {
        return raw * static_cast<double>(scale) - static_cast<double>(offset);
    }
    void rebuild_index();
    bool operator==(const ColumnSpec& o) const {
        return name == o.name && id == o.id && kind == o.kind && offset == o.offset && scale == o.scale &&
               categories == o.categories && null_code == o.null_code && byte_depth == o.byte_depth;
    }

private:
    std::unordered_map<std::string, Value> rank_index_;
};

// Column-major encoded dataset.
struct Table {
    std::vector<ColumnSpec> specs;
    std::vector<std::vector<Value>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    bool is_null(std::size_t col, std::size_t row) const {
        const auto& nc = specs[col].null_code;
        return nc && columns[col][row] == *nc;
    }
};

struct BinMeta {
    Value v_min = 0;
    Value v_max = 0;
    Count unique = 0;
    Count count = 0;  // h
    double mid = 0.0;
    double c_lo = 0.0;
    double c_hi = 0.0;

    double width() const { return static_cast<double>(v_max - v_min); }
    bool operator==(const BinMeta&) const = default;
};

double derive_bin_midpoint(const BinMeta& meta);

// Bin index of v for a closed-last-bin edge vector, clamped to the ends.
std::size_t find_bin(std::span<const Value> edges, Value v);

struct Histogram1D {
    std::uint32_t column = 0;
    std::vector<Value> edges;  // k+1, the last bin is closed
    std::vector<BinMeta> bins;

    std::size_t size() const { return bins.size(); }
    std::size_t find(Value v) const { return find_bin(edges, v); }
    bool operator==(const Histogram1D&) const = default;
};

struct Histogram2D {
    std::uint32_t row_column = 0;  // i
    std::uint32_t col_column = 0;  // j, always i < j
    std::vector<Value> row_edges;
    std::vector<Value> col_edges;
    std::vector<Count> counts;  // row-major
    std::vector<BinMeta> row_meta;
    std::vector<BinMeta> col_meta;
    // Index of the 1-d bin each refined bin falls in; rebuilt on load.
    std::vector<std::uint32_t> row_to_1d;
    std::vector<std::uint32_t> col_to_1d;

    std::size_t rows() const { return row_meta.size(); }
    std::size_t cols() const { return col_meta.size(); }
    Count at(std::size_t r, std::size_t c) const { return counts[r * cols() + c]; }
    bool operator==(const Histogram2D&) const = default;
};

struct Synopsis {
    Params params;
    std::vector<ColumnSpec> columns;
    std::vector<Histogram1D> hists1d;
    std::vector<Histogram2D> hists2d;  // (0,1),(0,2)..(0,d-1),(1,2)..

    static std::size_t pair_index(std::size_t i, std::size_t j, std::size_t d);
    const Histogram2D& pair(std::size_t i, std::size_t j) const;
    std::optional<std::uint32_t> column_index(std::string_view name) const;
    bool operator==(const Synopsis&) const = default;
};

struct CoverageVector {
    std::uint32_t column = 0;
    std::vector<double> beta;
    std::vector<double> beta_lo;
    std::vector<double> beta_hi;
};

struct WeightingsVector {
    std::uint32_t column = 0;
    std::vector<double> w;
    std::vector<double> w_lo;
    std::vector<double> w_hi;

    static double norm(std::span<const double> v);
};

enum class Aggregate : std::uint8_t { Count, Sum, Avg, Min, Max, Median, Var };
enum class CompareOp : std::uint8_t { Less, Greater, LessEqual, GreaterEqual, Equal, NotEqual };

std::string_view to_string(Aggregate agg);
std::string_view to_string(CompareOp op);

struct Condition {
    enum class Literal : std::uint8_t { Value, Null, UnknownCategory };

    std::uint32_t column = 0;
    CompareOp op = CompareOp::Equal;
    double literal = 0.0;  // encoded domain, unrounded
    Literal kind = Literal::Value;

    bool is_range() const {
        return kind == Literal::Value && op != CompareOp::Equal && op != CompareOp::NotEqual;
    }
    bool matches(double encoded) const;
};

struct Predicate {
    enum class Kind : std::uint8_t { Leaf, And, Or };

    Kind kind = Kind::Leaf;
    Condition condition;
    std::vector<Predicate> children;

    static Predicate leaf(Condition c) { return Predicate{Kind::Leaf, c, {}}; }
    static Predicate node(Kind kind, std::vector<Predicate> children);
    void collect_columns(std::vector<std::uint32_t>& out) const;
};

struct QueryPlan {
    Aggregate aggregate = Aggregate::Count;
    std::optional<std::uint32_t> agg_column;
    std::optional<Predicate> predicate;
    std::optional<std::uint32_t> group_by;

    std::vector<std::uint32_t> predicate_columns() const;
};

struct GroupResult;

struct AQPResult {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool empty = false;
    std::vector<GroupResult> groups;
};

struct GroupResult {
    std::string label;
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool empty = false;
};

struct AggregationWork {
    std::optional<std::size_t> t_star;
    double f = 0.0;
    std::vector<double> xi_lo;
    std::vector<double> xi_hi;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint32_t s = 0;
    double delta = 0.0;
    double width = 0.0;
    double chi_crit = 0.0;
    static constexpr double z98 = 2.326;
};

}  // namespace pwh
