#include "pwh/storage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "pwh/construct.hpp"
#include "pwh/error.hpp"

namespace pwh {

void BitWriter::put(std::uint64_t value, unsigned bits) {
    if (bits > 64) throw InvariantError("bit field wider than 64");
    for (unsigned b = bits; b-- > 0;) {
        if (bits_ % 8 == 0) bytes_.push_back(0);
        if ((value >> b) & 1U) bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (bits_ % 8));
        ++bits_;
    }
}

void BitWriter::put_unary(std::uint64_t q) {
    for (std::uint64_t n = 0; n < q; ++n) put(1, 1);
    put(0, 1);
}

std::vector<std::uint8_t> BitWriter::finish() && { return std::move(bytes_); }

bool BitReader::next_bit() {
    if (pos_ >= bytes_.size() * 8) throw FormatError("bit stream ends early");
    const bool bit = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1U;
    ++pos_;
    return bit;
}

std::uint64_t BitReader::get(unsigned bits) {
    if (bits > 64) throw InvariantError("bit field wider than 64");
    std::uint64_t v = 0;
    for (unsigned b = 0; b < bits; ++b) v = (v << 1) | (next_bit() ? 1U : 0U);
    return v;
}

std::uint64_t BitReader::get_unary() {
    std::uint64_t q = 0;
    while (next_bit()) ++q;
    return q;
}

void golomb_encode(BitWriter& out, std::uint64_t value, unsigned rice_k) {
    out.put_unary(value >> rice_k);
    out.put(value & ((rice_k == 64 ? 0 : (std::uint64_t{1} << rice_k)) - 1), rice_k);
}

std::uint64_t golomb_decode(BitReader& in, unsigned rice_k) {
    const auto q = in.get_unary();
    return (q << rice_k) | in.get(rice_k);
}

std::vector<std::uint8_t> golomb_encode(std::span<const std::uint64_t> values, unsigned rice_k) {
    BitWriter w;
    for (auto v : values) golomb_encode(w, v, rice_k);
    return std::move(w).finish();
}

std::vector<std::uint64_t> golomb_decode(std::span<const std::uint8_t> bytes, unsigned rice_k, std::size_t n) {
    BitReader r(bytes);
    std::vector<std::uint64_t> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(golomb_decode(r, rice_k));
    return out;
}

std::uint8_t bits_per_count(std::span<const Count> counts) {
    const Count mx = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    return static_cast<std::uint8_t>(std::max<Count>(1, std::bit_width(mx)));
}

std::size_t dense_counts_bytes(std::size_t cells, std::uint8_t bits) { return (cells * bits + 7) / 8; }

CountsEncoding encode_dense(std::span<const Count> counts) {
    CountsEncoding enc;
    enc.bits_per_count = bits_per_count(counts);
    BitWriter w;
    for (auto c : counts) w.put(c, enc.bits_per_count);
    enc.payload = std::move(w).finish();
    return enc;
}

CountsEncoding encode_sparse(std::span<const Count> counts) {
    CountsEncoding enc;
    enc.sparse = true;
    enc.bits_per_count = bits_per_count(counts);
    std::vector<std::uint64_t> gaps;
    std::int64_t prev = -1;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) continue;
        gaps.push_back(static_cast<std::uint64_t>(static_cast<std::int64_t>(c) - prev - 1));
        prev = static_cast<std::int64_t>(c);
    }
    if (gaps.size() > UINT32_MAX) throw InvariantError("too many non-zero cells");
    enc.nonzero = static_cast<std::uint32_t>(gaps.size());
    if (!gaps.empty()) {
        const double mean = static_cast<double>(std::accumulate(gaps.begin(), gaps.end(), std::uint64_t{0})) /
                            static_cast<double>(gaps.size());
        enc.rice_k = mean >= 1.0 ? static_cast<std::uint8_t>(std::floor(std::log2(mean))) : 0;
    }
    BitWriter w;
    std::size_t g = 0;
    for (auto c : counts) {
        if (c == 0) continue;
        golomb_encode(w, gaps[g++], enc.rice_k);
        w.put(c, enc.bits_per_count);
    }
    enc.payload = std::move(w).finish();
    return enc;
}

CountsEncoding choose_counts_encoding(std::span<const Count> counts) {
    auto dense = encode_dense(counts);
    auto sparse = encode_sparse(counts);
    return sparse.total_bytes() < dense.total_bytes() ? std::move(sparse) : std::move(dense);
}

namespace {

// Decodes a counts payload; returns the bytes consumed.
std::size_t decode_payload(std::span<const std::uint8_t> bytes, const CountsEncoding& head, std::size_t cells,
                           std::vector<Count>& out) {
    out.assign(cells, 0);
    BitReader r(bytes);
    if (!head.sparse) {
        for (auto& c : out) c = r.get(head.bits_per_count);
    } else {
        std::uint64_t idx = 0;
        for (std::uint32_t n = 0; n < head.nonzero; ++n) {
            idx += golomb_decode(r, head.rice_k);
            if (idx >= cells) throw FormatError("sparse cell index out of range");
            out[idx] = r.get(head.bits_per_count);
            if (out[idx] == 0) throw FormatError("sparse entry with zero count");
            ++idx;
        }
    }
    return (r.position() + 7) / 8;
}

}  // namespace

std::vector<Count> decode_counts(const CountsEncoding& enc, std::size_t cells) {
    std::vector<Count> out;
    decode_payload(enc.payload, enc, cells, out);
    return out;
}

namespace {

constexpr std::uint8_t kMagic[4] = {'P', 'W', 'H', '1'};

class ByteWriter {
public:
    template <class T>
    void le(T v, std::size_t width = sizeof(T)) {
        auto u = static_cast<std::uint64_t>(v);
        for (std::size_t b = 0; b < width; ++b) bytes.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
    }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        le(static_cast<std::uint32_t>(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
    void raw(std::span<const std::uint8_t> b) { bytes.insert(bytes.end(), b.begin(), b.end()); }

    std::vector<std::uint8_t> bytes;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> b) : bytes_(b) {}

    void block(std::string name) { block_ = std::move(name); }
    const std::string& block() const { return block_; }

    std::uint64_t le(std::size_t width) {
        need(width);
        std::uint64_t v = 0;
        for (std::size_t b = 0; b < width; ++b) v |= std::uint64_t{bytes_[pos_ + b]} << (8 * b);
        pos_ += width;
        return v;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    double f64() { return std::bit_cast<double>(le(8)); }
    std::string str() {
        const auto n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }
    bool done() const { return pos_ == bytes_.size(); }
    [[noreturn]] void fail(const std::string& what) const { throw FormatError(what + " in " + block_); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw FormatError("truncated " + block_);
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    std::string block_ = "header";
};

void put_value(ByteWriter& w, Value v, std::uint8_t depth) {
    if (v < 0 || (depth < 8 && static_cast<std::uint64_t>(v) >> (8 * depth)) != 0)
        throw InvariantError("value " + std::to_string(v) + " does not fit in " + std::to_string(depth) +
                             " bytes");
    w.le(v, depth);
}

void put_u32(ByteWriter& w, Count v) {
    if (v > UINT32_MAX) throw InvariantError("unique count exceeds 32 bits");
    w.le(static_cast<std::uint32_t>(v));
}

void put_counts(ByteWriter& w, const CountsEncoding& enc) {
    w.le(static_cast<std::uint8_t>((enc.sparse ? 0x80 : 0) | enc.bits_per_count));
    if (enc.sparse) {
        w.le(enc.nonzero);
        w.le(enc.rice_k);
    }
    w.raw(enc.payload);
}

std::vector<Count> get_counts(ByteReader& r, std::size_t cells) {
    const auto head_byte = r.u8();
    CountsEncoding head;
    head.sparse = (head_byte & 0x80) != 0;
    head.bits_per_count = head_byte & 0x7F;
    if (head.bits_per_count == 0 || head.bits_per_count > 64) r.fail("bad count width");
    if (head.sparse) {
        head.nonzero = r.u32();
        head.rice_k = r.u8();
        if (head.rice_k > 63) r.fail("bad Rice parameter");
    }
    std::vector<Count> out;
    std::size_t used = 0;
    try {
        used = decode_payload(r.rest(), head, cells, out);
    } catch (const FormatError& e) {
        r.fail(std::string("truncated or corrupt payload (") + e.what() + ")");
    }
    r.skip(used);
    return out;
}

std::vector<Value> diff_edges(std::span<const Value> refined, std::span<const Value> base) {
    std::vector<Value> out;
    std::set_difference(refined.begin(), refined.end(), base.begin(), base.end(), std::back_inserter(out));
    return out;
}

void put_dimension(ByteWriter& w, std::span<const Value> refined, std::span<const BinMeta> meta,
                   std::span<const Value> base, std::uint8_t depth) {
    std::vector<std::size_t> starts;  // piece index starting at each new edge
    for (std::size_t r = 1; r + 1 < refined.size(); ++r)
        if (!std::binary_search(base.begin(), base.end(), refined[r])) starts.push_back(r);
    for (auto r : starts) put_value(w, refined[r], depth);
    for (auto r : starts) put_value(w, meta[r].v_min, depth);
    for (auto r : starts) put_value(w, meta[r - 1].v_max, depth);
    for (auto r : starts) put_u32(w, meta[r].unique);
}

struct Dimension {
    std::vector<Value> edges;
    std::vector<BinMeta> meta;
};

Dimension get_dimension(ByteReader& r, std::size_t added, const Histogram1D& base, std::uint8_t depth) {
    std::vector<Value> edges(added), mins(added), maxs(added);
    std::vector<Count> uniques(added);
    for (auto& e : edges) e = static_cast<Value>(r.le(depth));
    for (auto& e : mins) e = static_cast<Value>(r.le(depth));
    for (auto& e : maxs) e = static_cast<Value>(r.le(depth));
    for (auto& u : uniques) u = r.u32();
    if (!std::is_sorted(edges.begin(), edges.end()) || std::adjacent_find(edges.begin(), edges.end()) != edges.end())
        r.fail("new edges not strictly increasing");

    Dimension dim;
    std::merge(base.edges.begin(), base.edges.end(), edges.begin(), edges.end(), std::back_inserter(dim.edges));
    const std::size_t pieces = dim.edges.size() - 1;
    dim.meta.resize(pieces);
    std::size_t next_new = 0;
    std::vector<std::size_t> new_at(pieces + 1, SIZE_MAX);
    for (std::size_t e = 1; e < pieces; ++e) {
        if (next_new < added && dim.edges[e] == edges[next_new]) {
            if (base.edges.size() > 1 && std::binary_search(base.edges.begin(), base.edges.end(), edges[next_new]))
                r.fail("new edge repeats a 1-d edge");
            new_at[e] = next_new++;
        }
    }
    if (next_new != added) r.fail("new edge outside the column range");

    for (std::size_t p = 0; p < pieces;) {
        // Pieces p..q-1 make up one 1-d bin.
        std::size_t q = p + 1;
        while (q < pieces && new_at[q] != SIZE_MAX) ++q;
        const auto& bin = base.bins[base.find(dim.edges[p])];
        Count rest = 0;
        for (std::size_t x = p + 1; x < q; ++x) {
            dim.meta[x].unique = uniques[new_at[x]];
            dim.meta[x].v_min = mins[new_at[x]];
            rest += dim.meta[x].unique;
        }
        if (rest > bin.unique) r.fail("piece unique counts exceed their bin");
        dim.meta[p].unique = bin.unique - rest;
        dim.meta[p].v_min = dim.meta[p].unique > 0 ? bin.v_min : dim.edges[p];
        for (std::size_t x = p; x + 1 < q; ++x) dim.meta[x].v_max = maxs[new_at[x + 1]];
        dim.meta[q - 1].v_max = dim.meta[q - 1].unique > 0 ? bin.v_max : dim.edges[q];
        p = q;
    }
    return dim;
}

std::vector<Count> diagonal(const Histogram1D& h) {
    const std::size_t k = h.size();
    std::vector<Count> cells(k * k, 0);
    for (std::size_t t = 0; t < k; ++t) cells[t * k + t] = h.bins[t].count;
    return cells;
}

std::vector<std::uint8_t> write_all(const Synopsis& syn, StorageReport* report) {
    const std::size_t d = syn.columns.size();
    if (d == 0 || d > 255) throw InvariantError("column count must lie in [1, 255]");
    if (syn.hists1d.size() != d || syn.hists2d.size() != d * (d - 1) / 2)
        throw InvariantError("synopsis histogram count disagrees with its columns");
    ByteWriter w;
    auto mark = w.bytes.size();
    auto section = [&](std::vector<std::size_t>* into, std::size_t* one) {
        const auto n = w.bytes.size() - mark;
        mark = w.bytes.size();
        if (report) {
            if (into) into->push_back(n);
            if (one) *one = n;
        }
    };

    w.raw(kMagic);
    section(nullptr, nullptr);
    w.le(static_cast<std::uint64_t>(syn.params.rows));
    w.le(static_cast<std::uint64_t>(syn.params.samples));
    w.le(syn.params.min_points);
    w.f64(syn.params.alpha);
    w.le(static_cast<std::uint8_t>(d));
    for (const auto& c : syn.columns) w.le(c.byte_depth);
    section(nullptr, report ? &report->params : nullptr);

    for (std::size_t c = 0; c < d; ++c) {
        const auto& h = syn.hists1d[c];
        const auto m = syn.columns[c].byte_depth;
        if (h.size() == 0 || h.size() > UINT16_MAX) throw InvariantError("bin count out of range");
        if (h.edges.front() != h.bins.front().v_min) throw InvariantError("first edge is not the first bin minimum");
        w.le(static_cast<std::uint16_t>(h.size()));
        for (std::size_t t = 1; t < h.edges.size(); ++t) put_value(w, h.edges[t], m);
        for (const auto& b : h.bins) put_value(w, b.v_min, m);
        for (const auto& b : h.bins) put_value(w, b.v_max, m);
        for (const auto& b : h.bins) put_u32(w, b.unique);
        section(report ? &report->one_d : nullptr, nullptr);
    }

    for (const auto& h : syn.hists2d) {
        const auto& hi = syn.hists1d[h.row_column];
        const auto& hj = syn.hists1d[h.col_column];
        const auto added_r = diff_edges(h.row_edges, hi.edges).size();
        const auto added_c = diff_edges(h.col_edges, hj.edges).size();
        if (added_r > UINT16_MAX || added_c > UINT16_MAX) throw InvariantError("too many refined edges");
        w.le(static_cast<std::uint16_t>(added_r));
        w.le(static_cast<std::uint16_t>(added_c));
        put_dimension(w, h.row_edges, h.row_meta, hi.edges, syn.columns[h.row_column].byte_depth);
        put_dimension(w, h.col_edges, h.col_meta, hj.edges, syn.columns[h.col_column].byte_depth);
        section(report ? &report->two_d : nullptr, nullptr);
    }

    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            const auto enc = i == j ? choose_counts_encoding(diagonal(syn.hists1d[i]))
                                    : choose_counts_encoding(syn.pair(i, j).counts);
            put_counts(w, enc);
            if (report) report->sparse.push_back(enc.sparse);
            section(report ? &report->counts : nullptr, nullptr);
        }
    }

    for (const auto& c : syn.columns) {
        w.str(c.name);
        w.le(static_cast<std::uint8_t>(c.kind));
        w.le(c.offset);
        w.le(c.scale);
        w.le(static_cast<std::uint8_t>(c.null_code.has_value()));
        w.le(c.null_code.value_or(0));
        w.le(static_cast<std::uint32_t>(c.categories.size()));
        for (const auto& label : c.categories) w.str(label);
    }
    section(nullptr, report ? &report->schema : nullptr);
    if (report) report->total = w.bytes.size();
    return std::move(w.bytes);
}

std::string pair_name(std::size_t i, std::size_t j) {
    return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

}  // namespace

std::vector<std::uint8_t> serialize(const Synopsis& synopsis) { return write_all(synopsis, nullptr); }

StorageReport storage_report(const Synopsis& synopsis) {
    StorageReport rep;
    write_all(synopsis, &rep);
    return rep;
}

Synopsis deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.block("magic");
    for (auto b : kMagic)
        if (r.u8() != b) throw FormatError("bad magic");

    Synopsis syn;
    r.block("parameter block");
    syn.params.rows = r.u64();
    syn.params.samples = r.u64();
    syn.params.min_points = r.u32();
    syn.params.alpha = r.f64();
    const std::size_t d = r.u8();
    if (d == 0) r.fail("zero columns");
    syn.params.columns = static_cast<std::uint32_t>(d);
    syn.columns.resize(d);
    for (std::size_t c = 0; c < d; ++c) {
        const auto m = r.u8();
        if (m != 1 && m != 2 && m != 4 && m != 8) r.fail("byte depth " + std::to_string(m));
        syn.columns[c].byte_depth = m;
        syn.columns[c].id = static_cast<std::uint32_t>(c);
    }
    try {
        syn.params.validate();
    } catch (const InputError& e) {
        r.fail(e.what());
    }

    syn.hists1d.resize(d);
    for (std::size_t c = 0; c < d; ++c) {
        r.block("1-d block for column " + std::to_string(c));
        const auto m = syn.columns[c].byte_depth;
        auto& h = syn.hists1d[c];
        h.column = static_cast<std::uint32_t>(c);
        const std::size_t k = r.u16();
        if (k == 0) r.fail("inconsistent k");
        h.bins.resize(k);
        std::vector<Value> upper(k);
        for (auto& e : upper) e = static_cast<Value>(r.le(m));
        for (auto& b : h.bins) b.v_min = static_cast<Value>(r.le(m));
        for (auto& b : h.bins) b.v_max = static_cast<Value>(r.le(m));
        for (auto& b : h.bins) b.unique = r.u32();
        h.edges.push_back(h.bins.front().v_min);
        h.edges.insert(h.edges.end(), upper.begin(), upper.end());
        const bool degenerate = k == 1 && h.edges[0] == h.edges[1];
        if (!degenerate && std::adjacent_find(h.edges.begin(), h.edges.end(), std::greater_equal<>()) != h.edges.end())
            r.fail("edges not strictly increasing");
        for (std::size_t t = 0; t < k; ++t)
            if (h.bins[t].v_min > h.bins[t].v_max || h.bins[t].v_min < h.edges[t] || h.bins[t].v_max > h.edges[t + 1])
                r.fail("bin " + std::to_string(t) + " range outside its edges");
    }

    syn.hists2d.reserve(d * (d - 1) / 2);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            r.block("2-d block for pair " + pair_name(i, j));
            Histogram2D h;
            h.row_column = static_cast<std::uint32_t>(i);
            h.col_column = static_cast<std::uint32_t>(j);
            const std::size_t added_r = r.u16();
            const std::size_t added_c = r.u16();
            auto row = get_dimension(r, added_r, syn.hists1d[i], syn.columns[i].byte_depth);
            auto col = get_dimension(r, added_c, syn.hists1d[j], syn.columns[j].byte_depth);
            h.row_edges = std::move(row.edges);
            h.row_meta = std::move(row.meta);
            h.col_edges = std::move(col.edges);
            h.col_meta = std::move(col.meta);
            syn.hists2d.push_back(std::move(h));
        }
    }

    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            r.block("counts block for pair " + pair_name(i, j));
            if (i == j) {
                auto& h = syn.hists1d[i];
                const std::size_t k = h.size();
                const auto cells = get_counts(r, k * k);
                for (std::size_t a = 0; a < k; ++a)
                    for (std::size_t b = 0; b < k; ++b) {
                        if (a == b) h.bins[a].count = cells[a * k + b];
                        else if (cells[a * k + b] != 0) r.fail("off-diagonal count");
                    }
                for (const auto& b : h.bins)
                    if ((b.count == 0) != (b.unique == 0) || b.unique > b.count) r.fail("count and unique disagree");
            } else {
                auto& h = syn.hists2d[Synopsis::pair_index(i, j, d)];
                h.counts = get_counts(r, h.rows() * h.cols());
                for (std::size_t a = 0; a < h.rows(); ++a)
                    for (std::size_t b = 0; b < h.cols(); ++b) {
                        h.row_meta[a].count += h.at(a, b);
                        h.col_meta[b].count += h.at(a, b);
                    }
            }
        }
    }

    r.block("schema trailer");
    for (std::size_t c = 0; c < d; ++c) {
        auto& spec = syn.columns[c];
        spec.name = r.str();
        const auto kind = r.u8();
        if (kind > 3) r.fail("unknown column kind");
        spec.kind = static_cast<ColumnKind>(kind);
        spec.offset = static_cast<std::int64_t>(r.u64());
        spec.scale = static_cast<std::int64_t>(r.u64());
        if (spec.scale <= 0) r.fail("non-positive scale");
        const bool has_null = r.u8() != 0;
        const auto nc = static_cast<Value>(r.u64());
        if (has_null) spec.null_code = nc;
        const auto labels = r.u32();
        for (std::uint32_t l = 0; l < labels; ++l) spec.categories.push_back(r.str());
    }
    if (!r.done()) r.fail("trailing bytes");
    derive_metadata(syn);
    return syn;
}

std::size_t storage_upper_bound(const Synopsis& syn) {
    const std::size_t d = syn.columns.size();
    auto k_given = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == j) return syn.hists1d[i].size();
        const auto& h = syn.pair(i, j);
        return h.row_column == i ? h.rows() : h.cols();
    };
    auto ell = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == j) return bits_per_count(diagonal(syn.hists1d[i]));
        return bits_per_count(syn.pair(i, j).counts);
    };
    std::size_t total = 29 + d + 4 * d * d;
    for (std::size_t i = 0; i < d; ++i) {
        std::size_t sum_k = 0;
        for (std::size_t j = 0; j < d; ++j) sum_k += k_given(i, j);
        const std::size_t per_entry = 3 * syn.columns[i].byte_depth + 4;
        total += per_entry * (sum_k - (d - 1) * syn.hists1d[i].size());
        for (std::size_t j = 0; j < d; ++j) total += (k_given(i, j) * k_given(j, i) * ell(i, j) + 7) / 8;
    }
    return total;
}

void save_synopsis(const Synopsis& synopsis, const std::filesystem::path& path) {
    const auto bytes = serialize(synopsis);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Synopsis load_synopsis(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
    return deserialize(bytes);
}

}  // namespace pwh
