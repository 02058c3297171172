#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "pwh/model.hpp"

namespace pwh {

QueryPlan parse_query(std::string_view sql, const Synopsis& synopsis);

// A finite union of disjoint real intervals; the algebra behind consolidation.
class IntervalSet {
public:
    struct Interval {
        double lo;
        double hi;
        bool lo_closed;
        bool hi_closed;
    };

    static IntervalSet everything();
    static IntervalSet nothing() { return {}; }
    static IntervalSet point(double v);
    // Values satisfying a range condition.
    static IntervalSet of(const Condition& range);

    IntervalSet intersect(const IntervalSet& other) const;
    IntervalSet unite(const IntervalSet& other) const;
    bool contains(double x) const;
    // Length of the part inside [a, b].
    double measure_within(double a, double b) const;
    // Smallest and largest integers of the set inside [a, b], if any.
    std::optional<std::pair<Value, Value>> integer_hull(Value a, Value b) const;
    bool empty() const { return parts_.empty(); }
    std::span<const Interval> parts() const { return parts_; }

private:
    std::vector<Interval> parts_;
};

// Per-bin probability that a point of the bin lies in the set.
double set_coverage(const IntervalSet& set, const BinMeta& bin);
std::vector<double> coverage(const Condition& condition, std::span<const BinMeta> bins);

// Fraction of a bin's points in a fully covered (a) or touched (b) sub-bins of s; unclamped.
std::pair<double, double> analytic_partial_bounds(double h, double s, double a, double b, double chi_crit);

std::pair<double, double> coverage_bounds(double beta, Count h, Count unique, std::uint32_t min_points,
                                          double alpha);

CoverageVector consolidate_same_column(std::span<const Condition> conditions, Predicate::Kind combinator,
                                       std::span<const BinMeta> bins, const Params& params);

enum class Widening : std::uint8_t { Printed, BinomialCount };

struct QueryOptions {
    Widening widening = Widening::Printed;
    // Narrow each aggregation bin's value range to what the predicate admits.
    bool clip_to_predicate = true;
};

// Column whose 1-d histogram carries the weightings.
std::uint32_t aggregation_column(const QueryPlan& plan, const Synopsis& synopsis);

WeightingsVector weightings(const QueryPlan& plan, const Synopsis& synopsis, const QueryOptions& options = {});

AQPResult estimate_count(const WeightingsVector& w, double rho);
AQPResult estimate_sum(const WeightingsVector& w, std::span<const BinMeta> bins, const ColumnSpec& spec,
                       double rho);
AQPResult estimate_avg(const WeightingsVector& w, std::span<const BinMeta> bins, const ColumnSpec& spec);
AQPResult estimate_extremum(Aggregate kind, const WeightingsVector& w, std::span<const BinMeta> bins,
                            const ColumnSpec& spec, bool single_column, const Params& params,
                            Value column_min, Value column_max, AggregationWork* work = nullptr);
AQPResult estimate_median(const WeightingsVector& w, std::span<const BinMeta> bins, const ColumnSpec& spec,
                          AggregationWork* work = nullptr);
AQPResult estimate_var(const WeightingsVector& w, std::span<const BinMeta> bins, const ColumnSpec& spec,
                       AggregationWork* work = nullptr);

AQPResult execute(const QueryPlan& plan, const Synopsis& synopsis, const QueryOptions& options = {});
AQPResult run_query(std::string_view sql, const Synopsis& synopsis, const QueryOptions& options = {});

}  // namespace pwh
