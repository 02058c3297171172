#include "pwh/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "pwh/error.hpp"

namespace pwh {
namespace {

constexpr int kMaxLogScale = 9;
constexpr int kMaxDigits = 36;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

__int128 pow10_128(int e) {
    __int128 p = 1;
    for (int i = 0; i < e; ++i) p *= 10;
    return p;
}

int log10_of(std::int64_t scale) {
    int ls = 0;
    while (scale > 1) {
        scale /= 10;
        ++ls;
    }
    return ls;
}

bool fits_int64(__int128 v) {
    return v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max();
}

std::uint8_t byte_depth_for(Value max_value) {
    for (std::uint8_t m : {1, 2, 4}) {
        if (max_value < (Value{1} << (8 * m))) return m;
    }
    return 8;
}

bool parse_fixed(std::string_view& s, std::size_t width, int& out) {
    if (s.size() < width) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + width, out);
    if (ec != std::errc{} || p != s.data() + width) return false;
    s.remove_prefix(width);
    return true;
}

bool eat(std::string_view& s, char c) {
    if (s.empty() || s.front() != c) return false;
    s.remove_prefix(1);
    return true;
}

// Pre-offset integer for a non-null cell of a numeric or datetime column.
std::int64_t pre_offset(std::string_view text, ColumnKind kind, int log_scale) {
    if (kind == ColumnKind::Datetime) {
        auto t = parse_datetime(text);
        if (!t) throw InputError("not a datetime: '" + std::string(text) + "'");
        return *t;
    }
    auto num = parse_decimal(text);
    if (!num) throw InputError("not a number: '" + std::string(text) + "'");
    return num->scaled(log_scale);
}

}  // namespace

std::int64_t DecimalNumber::scaled(int log_scale) const {
    int e = exponent + log_scale;
    __int128 v;
    if (e >= 0) {
        if (e > kMaxDigits) throw InputError("numeric value out of range");
        v = digits * pow10_128(e);
    } else if (-e > kMaxDigits) {
        v = 0;
    } else {
        __int128 div = pow10_128(-e);
        __int128 q = digits / div;
        __int128 r = digits % div;
        if (r < 0) r = -r;
        if (2 * r >= div) q += digits < 0 ? -1 : 1;
        v = q;
    }
    if (!fits_int64(v)) throw InputError("numeric value out of range");
    return static_cast<std::int64_t>(v);
}

long double DecimalNumber::to_long_double() const {
    return static_cast<long double>(digits) * std::pow(10.0L, static_cast<long double>(exponent));
}

std::optional<DecimalNumber> parse_decimal(std::string_view text) {
    std::string_view s = trim(text);
    if (s.empty()) return std::nullopt;
    bool negative = false;
    if (s.front() == '+' || s.front() == '-') {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    DecimalNumber out;
    int significant = 0;
    int seen_digits = 0;
    bool in_fraction = false;
    while (!s.empty()) {
        char c = s.front();
        if (c >= '0' && c <= '9') {
            ++seen_digits;
            if (out.digits != 0 || c != '0') {
                if (++significant > kMaxDigits) return std::nullopt;
            }
            out.digits = out.digits * 10 + (c - '0');
            if (in_fraction) --out.exponent;
        } else if (c == '.' && !in_fraction) {
            in_fraction = true;
        } else {
            break;
        }
        s.remove_prefix(1);
    }
    if (seen_digits == 0) return std::nullopt;
    if (!s.empty()) {
        if (s.front() != 'e' && s.front() != 'E') return std::nullopt;
        s.remove_prefix(1);
        if (!s.empty() && s.front() == '+') s.remove_prefix(1);
        int exp = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), exp);
        if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
        if (exp > 1000 || exp < -1000) return std::nullopt;
        out.exponent += exp;
    }
    if (out.digits == 0) return DecimalNumber{};
    while (out.digits % 10 == 0) {
        out.digits /= 10;
        ++out.exponent;
    }
    if (negative) out.digits = -out.digits;
    return out;
}

std::optional<std::int64_t> parse_datetime(std::string_view text) {
    using namespace std::chrono;
    std::string_view s = trim(text);
    int y = 0, mo = 0, d = 0, hh = 0, mi = 0, ss = 0;
    if (!parse_fixed(s, 4, y) || !eat(s, '-') || !parse_fixed(s, 2, mo) || !eat(s, '-') ||
        !parse_fixed(s, 2, d))
        return std::nullopt;
    if (!s.empty() && (s.front() == 'T' || s.front() == ' ')) {
        s.remove_prefix(1);
        if (!parse_fixed(s, 2, hh) || !eat(s, ':') || !parse_fixed(s, 2, mi)) return std::nullopt;
        if (eat(s, ':') && !parse_fixed(s, 2, ss)) return std::nullopt;
    }
    eat(s, 'Z');
    if (!s.empty()) return std::nullopt;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mi > 59 || ss > 59) return std::nullopt;
    auto t = sys_days{ymd} + hours{hh} + minutes{mi} + seconds{ss};
    return static_cast<std::int64_t>(t.time_since_epoch().count());
}

std::string format_datetime(std::int64_t epoch_seconds) {
    using namespace std::chrono;
    sys_seconds t{seconds{epoch_seconds}};
    auto day_start = floor<days>(t);
    year_month_day ymd{day_start};
    hh_mm_ss hms{t - day_start};
    char buf[40];
    if (hms.to_duration().count() == 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                      static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                      static_cast<long>(hms.seconds().count()));
    }
    return buf;
}

ColumnSpec infer_column_spec(std::span<const RawCell> cells, std::optional<ColumnKind> declared) {
    if (cells.empty()) throw InputError("cannot infer a column from zero cells");
    std::vector<std::string_view> present;
    present.reserve(cells.size());
    for (const auto& c : cells)
        if (c) present.emplace_back(*c);
    const bool has_missing = present.size() != cells.size();

    ColumnSpec spec;
    int max_fraction = 0;
    if (declared) {
        spec.kind = *declared;
    } else if (present.empty()) {
        spec.kind = ColumnKind::Integer;
    } else {
        bool all_numeric = true, any_numeric = false, all_datetime = true;
        for (auto text : present) {
            if (auto num = parse_decimal(text)) {
                any_numeric = true;
                max_fraction = std::max(max_fraction, num->fraction_digits());
            } else {
                all_numeric = false;
            }
            if (all_datetime && !parse_datetime(text)) all_datetime = false;
        }
        if (all_numeric)
            spec.kind = max_fraction > 0 ? ColumnKind::Decimal : ColumnKind::Integer;
        else if (all_datetime)
            spec.kind = ColumnKind::Datetime;
        else if (any_numeric)
            throw InputError("ambiguous column kind");
        else
            spec.kind = ColumnKind::Categorical;
    }

    Value max_encoded = -1;
    if (spec.kind == ColumnKind::Categorical) {
        std::map<std::string_view, Count> freq;
        for (auto text : present) ++freq[text];
        std::vector<std::pair<std::string_view, Count>> ranked(freq.begin(), freq.end());
        // map order is lexicographic, so a stable sort on frequency keeps ties ordered.
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        for (const auto& [label, n] : ranked) spec.categories.emplace_back(label);
        spec.rebuild_index();
        max_encoded = static_cast<Value>(spec.categories.size()) - 1;
    } else if (!present.empty()) {
        if (spec.kind == ColumnKind::Decimal || spec.kind == ColumnKind::Integer) {
            max_fraction = 0;
            for (auto text : present) {
                auto num = parse_decimal(text);
                if (!num) throw InputError("not a number: '" + std::string(text) + "'");
                max_fraction = std::max(max_fraction, num->fraction_digits());
            }
            if (spec.kind == ColumnKind::Integer && max_fraction > 0)
                throw InputError("fractional value in integer column");
            max_fraction = std::min(max_fraction, kMaxLogScale);
            spec.scale = static_cast<std::int64_t>(pow10_128(max_fraction));
        }
        const int ls = log10_of(spec.scale);
        std::int64_t lo = std::numeric_limits<std::int64_t>::max();
        std::int64_t hi = std::numeric_limits<std::int64_t>::min();
        for (auto text : present) {
            auto v = pre_offset(text, spec.kind, ls);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        spec.offset = lo;
        max_encoded = hi - lo;
    }
    if (has_missing) spec.null_code = max_encoded + 1;
    spec.byte_depth = byte_depth_for(std::max<Value>({max_encoded, spec.null_code.value_or(0), 0}));
    return spec;
}

std::vector<Value> encode_column(std::span<const RawCell> cells, const ColumnSpec& spec) {
    std::vector<Value> out;
    out.reserve(cells.size());
    const int ls = log10_of(spec.scale);
    const Value limit = spec.null_code ? *spec.null_code
                        : spec.byte_depth >= 8 ? std::numeric_limits<Value>::max()
                                               : (Value{1} << (8 * spec.byte_depth));
    for (const auto& cell : cells) {
        if (!cell) {
            if (!spec.null_code) throw InputError("missing value in column '" + spec.name + "' without a null code");
            out.push_back(*spec.null_code);
            continue;
        }
        Value v;
        if (spec.kind == ColumnKind::Categorical) {
            auto rank = spec.rank_of(*cell);
            if (!rank) throw InputError("unknown category");
            v = *rank;
        } else {
            auto pre = pre_offset(*cell, spec.kind, ls);
            if (pre < spec.offset) throw InputError("value precedes declared minimum");
            v = pre - spec.offset;
        }
        if (v >= limit) throw InputError("value exceeds column range");
        out.push_back(v);
    }
    return out;
}

RawCell decode_cell(Value encoded, const ColumnSpec& spec) {
    if (spec.null_code && encoded == *spec.null_code) return std::nullopt;
    switch (spec.kind) {
        case ColumnKind::Categorical:
            if (encoded < 0 || static_cast<std::size_t>(encoded) >= spec.categories.size())
                throw InputError("category rank out of range");
            return spec.categories[static_cast<std::size_t>(encoded)];
        case ColumnKind::Datetime:
            return format_datetime(encoded + spec.offset);
        case ColumnKind::Integer:
            return std::to_string(encoded + spec.offset);
        case ColumnKind::Decimal: {
            const std::int64_t v = encoded + spec.offset;
            const int ls = log10_of(spec.scale);
            const std::uint64_t mag = v < 0 ? 0 - static_cast<std::uint64_t>(v) : static_cast<std::uint64_t>(v);
            std::string digits = std::to_string(mag);
            if (static_cast<int>(digits.size()) <= ls) digits.insert(0, ls + 1 - digits.size(), '0');
            digits.insert(digits.size() - ls, ".");
            return (v < 0 ? "-" : "") + digits;
        }
    }
    return std::nullopt;
}

Condition transform_literal(std::string_view literal, CompareOp op, const ColumnSpec& spec) {
    Condition c;
    c.column = spec.id;
    c.op = op;
    if (spec.kind == ColumnKind::Categorical) {
        if (op != CompareOp::Equal && op != CompareOp::NotEqual)
            throw QueryError("unsupported query shape: range condition on categorical column '" + spec.name + "'");
        auto rank = spec.rank_of(literal);
        if (rank) {
            c.literal = static_cast<double>(*rank);
        } else {
            c.kind = Condition::Literal::UnknownCategory;
        }
        return c;
    }
    if (spec.kind == ColumnKind::Datetime) {
        auto t = parse_datetime(literal);
        if (!t) throw QueryError("literal '" + std::string(literal) + "' is not a datetime");
        c.literal = static_cast<double>(*t - spec.offset);
        return c;
    }
    auto num = parse_decimal(literal);
    if (!num) throw QueryError("literal '" + std::string(literal) + "' is not numeric");
    const int ls = log10_of(spec.scale);
    if (num->fraction_digits() <= ls) {
        try {
            c.literal = static_cast<double>(num->scaled(ls) - spec.offset);
            return c;
        } catch (const InputError&) {
            // falls through to the inexact path for huge literals
        }
    }
    DecimalNumber shifted = *num;
    shifted.exponent += ls;
    c.literal = static_cast<double>(shifted.to_long_double() - static_cast<long double>(spec.offset));
    return c;
}

}  // namespace pwh
