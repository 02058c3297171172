#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pwh/model.hpp"

namespace pwh {

struct RefineResult1D {
    std::vector<Value> upper_edges;
    std::vector<Value> v_mins;
    std::vector<Value> v_maxs;
    std::vector<Count> uniques;
    std::vector<Count> counts;
};

// closed_upper: the bin is [eL, eR] (the last bin of a column).
RefineResult1D refine_bin_1d(Value eL, Value eR, std::span<const Value> values, std::uint32_t min_points,
                             double alpha, bool closed_upper = false);

struct Point2 {
    Value x;  // row column
    Value y;  // col column
};

struct NewEdges2D {
    std::vector<Value> row;
    std::vector<Value> col;
};

NewEdges2D refine_bin_2d(Value eLi, Value eRi, Value eLj, Value eRj, std::span<const Point2> points,
                         std::uint32_t min_points, double alpha, bool closed_i = false, bool closed_j = false);

struct CentreBounds {
    double lo;
    double hi;
};

// The h >= M expression with no clamping, for a caller-supplied critical value.
CentreBounds analytic_centre_bounds(double h, double v_min, double v_max, Count unique, double chi_crit);

CentreBounds weighted_centre_bounds(Count h, Value v_min, Value v_max, Count unique, std::uint32_t min_points,
                                    double alpha, Value quantum = ColumnSpec::quantum);

struct BuildOptions {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    // Per column; nullopt (or a short vector) means the min/max default.
    std::vector<std::optional<std::vector<Value>>> initial_edges;
};

// Sorted row indices of a uniform sample without replacement.
std::vector<std::size_t> draw_sample(std::size_t rows, std::size_t samples, std::uint64_t seed);

// N and d are taken from the table; Ns, M and alpha from params.
Synopsis build_pairwise_hist(const Table& table, Params params, const BuildOptions& options = {});

// Recomputes midpoints, centre bounds and 1-d bin maps from stored fields.
void derive_metadata(Synopsis& synopsis);

struct LeafAudit {
    std::size_t bins_checked = 0;
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

// Re-tests every 1-d bin against the construction sample drawn with seed.
LeafAudit audit_leaves(const Synopsis& synopsis, const Table& table, std::uint64_t seed);

}  // namespace pwh
