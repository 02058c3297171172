#pragma once

#include <cstdint>
#include <span>

#include "pwh/model.hpp"

namespace pwh {

// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

std::uint32_t terrell_scott_subbins(Count unique);

// (1 - alpha) quantile of chi-squared with s - 1 degrees of freedom. Memoized.
double chi_squared_critical(std::uint32_t s, double alpha);

// Sub-bin occupancy statistic for values in [lo, lo + extent).
double chi_squared_statistic(std::span<const Value> values, Value lo, Value extent, std::uint32_t s);

// closed_upper treats the bin as [eL, eR] so its representable extent is eR - eL + 1.
bool is_uniform(std::span<const Value> values, Value eL, Value eR, Count unique, double alpha,
                bool closed_upper = false);

}  // namespace pwh
