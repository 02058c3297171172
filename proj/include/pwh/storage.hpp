#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pwh/model.hpp"

namespace pwh {

// MSB-first bit packing.
class BitWriter {
public:
    void put(std::uint64_t value, unsigned bits);
    void put_unary(std::uint64_t q);
    std::size_t bit_count() const { return bits_; }
    // Pads the last byte with zeros.
    std::vector<std::uint8_t> finish() &&;

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t bits_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
    std::uint64_t get(unsigned bits);
    std::uint64_t get_unary();
    std::size_t position() const { return pos_; }

private:
    bool next_bit();
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void golomb_encode(BitWriter& out, std::uint64_t value, unsigned rice_k);
std::uint64_t golomb_decode(BitReader& in, unsigned rice_k);
std::vector<std::uint8_t> golomb_encode(std::span<const std::uint64_t> values, unsigned rice_k);
std::vector<std::uint64_t> golomb_decode(std::span<const std::uint8_t> bytes, unsigned rice_k, std::size_t n);

struct CountsEncoding {
    bool sparse = false;
    std::uint8_t bits_per_count = 1;  // l_h
    std::uint32_t nonzero = 0;        // theta, sparse only
    std::uint8_t rice_k = 0;          // sparse only
    std::vector<std::uint8_t> payload;

    std::size_t total_bytes() const { return 1 + (sparse ? 5 : 0) + payload.size(); }
};

std::uint8_t bits_per_count(std::span<const Count> counts);
std::size_t dense_counts_bytes(std::size_t cells, std::uint8_t bits);
CountsEncoding encode_dense(std::span<const Count> counts);
CountsEncoding encode_sparse(std::span<const Count> counts);
CountsEncoding choose_counts_encoding(std::span<const Count> counts);
std::vector<Count> decode_counts(const CountsEncoding& enc, std::size_t cells);

std::vector<std::uint8_t> serialize(const Synopsis& synopsis);
Synopsis deserialize(std::span<const std::uint8_t> bytes);

struct StorageReport {
    std::size_t magic = 4;
    std::size_t params = 0;
    std::vector<std::size_t> one_d;   // per column
    std::vector<std::size_t> two_d;   // per pair
    std::vector<std::size_t> counts;  // per block, i <= j order
    std::vector<bool> sparse;
    std::size_t schema = 0;
    std::size_t total = 0;

    // Bytes covered by the size formula: everything but magic and schema.
    std::size_t layout_bytes() const { return total - magic - schema; }
};

StorageReport storage_report(const Synopsis& synopsis);
// The upper-bound size formula evaluated on the synopsis.
std::size_t storage_upper_bound(const Synopsis& synopsis);

void save_synopsis(const Synopsis& synopsis, const std::filesystem::path& path);
Synopsis load_synopsis(const std::filesystem::path& path);

}  // namespace pwh
