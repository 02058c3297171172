#include "pwh/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "pwh/error.hpp"

namespace pwh {
namespace {

constexpr int kMaxIterations = 1000;
constexpr double kEps = 1e-16;

double gamma_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kMaxIterations; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper tail Q(a, x) by Lentz's continued fraction, valid for x >= a + 1.
double gamma_continued_fraction(double a, double x) {
    constexpr double tiny = std::numeric_limits<double>::min() / kEps;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIterations; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double regularized_gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_series(a, x);
    return gamma_continued_fraction(a, x);
}

double solve_upper_quantile(double dof, double alpha) {
    const double a = dof / 2.0;
    auto tail = [&](double x) { return regularized_gamma_q(a, x / 2.0); };
    double lo = 0.0;
    double hi = std::max(1.0, dof);
    while (tail(hi) > alpha) hi *= 2.0;
    while (hi - lo > 1e-11 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (tail(mid) > alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    if (a <= 0.0) throw InputError("gamma shape must be positive");
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return gamma_series(a, x);
    return 1.0 - gamma_continued_fraction(a, x);
}

std::uint32_t terrell_scott_subbins(Count unique) {
    if (unique < 2) throw InputError("uniformity test undefined");
    // Smallest s with s^3 >= 2u, done in integers to dodge cbrt rounding.
    const auto target = static_cast<unsigned __int128>(unique) * 2;
    auto s = static_cast<std::uint64_t>(std::cbrt(static_cast<double>(target)));
    while (s > 1 && static_cast<unsigned __int128>(s - 1) * (s - 1) * (s - 1) >= target) --s;
    while (static_cast<unsigned __int128>(s) * s * s < target) ++s;
    return static_cast<std::uint32_t>(s);
}

double chi_squared_critical(std::uint32_t s, double alpha) {
    if (s < 2) throw InputError("chi-squared critical value needs s >= 2");
    if (!(alpha > 0.0) || alpha > 1.0) throw InputError("alpha must lie in (0, 1)");
    if (alpha >= 1.0) return 0.0;

    static std::mutex mu;
    static std::map<std::pair<std::uint32_t, std::uint64_t>, double> memo;
    const auto key = std::make_pair(s, std::bit_cast<std::uint64_t>(alpha));
    {
        std::lock_guard lock(mu);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
    }
    const double q = solve_upper_quantile(static_cast<double>(s - 1), alpha);
    std::lock_guard lock(mu);
    memo.emplace(key, q);
    return q;
}

double chi_squared_statistic(std::span<const Value> values, Value lo, Value extent, std::uint32_t s) {
    if (values.empty()) return 0.0;
    std::vector<Count> occupancy(s, 0);
    for (Value x : values) {
        auto r = static_cast<std::uint64_t>(static_cast<__int128>(x - lo) * s / extent);
        ++occupancy[std::min<std::uint64_t>(r, s - 1)];
    }
    const double expected = static_cast<double>(values.size()) / s;
    double stat = 0.0;
    for (Count c : occupancy) {
        const double diff = static_cast<double>(c) - expected;
        stat += diff * diff / expected;
    }
    return stat;
}

bool is_uniform(std::span<const Value> values, Value eL, Value eR, Count unique, double alpha,
                bool closed_upper) {
    if (closed_upper ? eL > eR : eL >= eR) throw InputError("degenerate bin");
    const std::uint32_t s = terrell_scott_subbins(unique);
    const Value extent = eR - eL + (closed_upper ? 1 : 0);
    return chi_squared_statistic(values, eL, extent, s) <= chi_squared_critical(s, alpha);
}

}  // namespace pwh
