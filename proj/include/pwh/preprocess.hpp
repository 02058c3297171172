#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pwh/model.hpp"

namespace pwh {

// One CSV-style cell; nullopt is a missing value.
using RawCell = std::optional<std::string>;

// Exact decimal reading of a numeric token: value = digits * 10^exponent.
struct DecimalNumber {
    __int128 digits = 0;
    int exponent = 0;

    int fraction_digits() const { return exponent < 0 ? -exponent : 0; }
    // round_half_away(value * 10^log_scale), throws on overflow.
    std::int64_t scaled(int log_scale) const;
    long double to_long_double() const;
};

std::optional<DecimalNumber> parse_decimal(std::string_view text);
// Seconds since the Unix epoch for "YYYY-MM-DD[( |T)HH:MM[:SS]][Z]".
std::optional<std::int64_t> parse_datetime(std::string_view text);
std::string format_datetime(std::int64_t epoch_seconds);

ColumnSpec infer_column_spec(std::span<const RawCell> cells,
                             std::optional<ColumnKind> declared = std::nullopt);

std::vector<Value> encode_column(std::span<const RawCell> cells, const ColumnSpec& spec);

// Inverse of encode_column for one value; nullopt for the null code.
RawCell decode_cell(Value encoded, const ColumnSpec& spec);

// Encodes a predicate literal with the column's arithmetic, keeping fractions.
Condition transform_literal(std::string_view literal, CompareOp op, const ColumnSpec& spec);

}  // namespace pwh
