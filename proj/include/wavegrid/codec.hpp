#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavegrid/field.hpp"

namespace wavegrid {

struct corrupt_stream_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// CSR
// ---------------------------------------------------------------------------

struct CsrBlock {
    std::vector<double> v;
    std::vector<std::uint32_t> col;
    std::vector<std::uint32_t> row;  // rows + 1 offsets
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;

    std::size_t nnz() const { return v.size(); }
    /// 8 B per value, 4 B per column index, 4 B per row offset.
    std::size_t byte_size() const { return 8 * v.size() + 4 * col.size() + 4 * row.size(); }
};

/// Exact CSR of the nonzeros of a dense rows x cols view (zero == 0.0 exactly).
inline CsrBlock csr_encode(std::span<const double> dense, std::size_t rows,
                           std::size_t cols) {
    if (rows == 0 || cols == 0 || dense.size() != rows * cols)
        throw std::invalid_argument("csr_encode: bad shape");
    if (rows > std::numeric_limits<std::uint32_t>::max() - 1 ||
        cols > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("csr_encode: shape overflows 32-bit indices");
    CsrBlock b;
    b.rows = static_cast<std::uint32_t>(rows);
    b.cols = static_cast<std::uint32_t>(cols);
    b.row.reserve(rows + 1);
    b.row.push_back(0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double x = dense[r * cols + c];
            if (x != 0.0) {
                b.v.push_back(x);
                b.col.push_back(static_cast<std::uint32_t>(c));
            }
        }
        b.row.push_back(static_cast<std::uint32_t>(b.v.size()));
    }
    return b;
}

inline std::vector<double> csr_decode(const CsrBlock& b) {
    if (b.row.size() != b.rows + 1u || b.row.front() != 0 ||
        b.row.back() != b.v.size() || b.col.size() != b.v.size())
        throw corrupt_stream_error("csr_decode: invalid block structure");
    std::vector<double> dense(static_cast<std::size_t>(b.rows) * b.cols, 0.0);
    for (std::uint32_t r = 0; r < b.rows; ++r) {
        if (b.row[r] > b.row[r + 1])
            throw corrupt_stream_error("csr_decode: row offsets not nondecreasing");
        std::uint32_t prev_col = 0;
        for (std::uint32_t i = b.row[r]; i < b.row[r + 1]; ++i) {
            if (b.col[i] >= b.cols || (i > b.row[r] && b.col[i] <= prev_col))
                throw corrupt_stream_error("csr_decode: bad column index");
            prev_col = b.col[i];
            dense[static_cast<std::size_t>(r) * b.cols + b.col[i]] = b.v[i];
        }
    }
    return dense;
}

// ---------------------------------------------------------------------------
// LZ: chunked byte codec, LZ77 greedy matching within each chunk.
//
// Chunk format: a run of sequences. Each sequence is a token byte whose high
// nibble is the literal count and low nibble the match length minus 4 (both
// extended with 255-bytes when the nibble is 15), the literals, then a 2-byte
// little-endian match offset. The final sequence ends after its literals once
// raw_len bytes have been produced.
// ---------------------------------------------------------------------------

struct LzChunk {
    std::uint32_t raw_len = 0;
    std::vector<std::uint8_t> payload;
};

struct LzStream {
    std::size_t chunk_size = 0;
    std::vector<LzChunk> chunks;

    /// Σ (8 + enc_len): each chunk carries two u32 lengths plus its payload.
    std::size_t byte_size() const {
        std::size_t s = 0;
        for (const auto& c : chunks) s += 8 + c.payload.size();
        return s;
    }
};

namespace detail {

constexpr std::size_t lz_min_match = 4;
constexpr std::size_t lz_max_offset = 65535;

inline void lz_put_length(std::vector<std::uint8_t>& out, std::size_t len) {
    while (len >= 255) {
        out.push_back(255);
        len -= 255;
    }
    out.push_back(static_cast<std::uint8_t>(len));
}

inline std::uint32_t lz_hash(const std::uint8_t* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return (v * 2654435761u) >> 19;  // 13-bit table
}

inline std::vector<std::uint8_t> lz_encode_chunk(std::span<const std::uint8_t> in) {
    std::vector<std::uint8_t> out;
    out.reserve(in.size() / 2 + 16);
    constexpr std::size_t table_size = 1u << 13;
    std::vector<std::int64_t> table(table_size, -1);

    std::size_t anchor = 0;  // start of pending literals
    std::size_t pos = 0;
    const std::size_t n = in.size();

    auto emit = [&](std::size_t match_len, std::size_t offset) {
        const std::size_t lit = pos - anchor;
        const std::uint8_t lit_nib = lit < 15 ? static_cast<std::uint8_t>(lit) : 15;
        if (match_len == 0) {  // terminal literal-only sequence
            out.push_back(static_cast<std::uint8_t>(lit_nib << 4));
            if (lit_nib == 15) lz_put_length(out, lit - 15);
            out.insert(out.end(), in.begin() + anchor, in.begin() + pos);
            return;
        }
        const std::size_t ml = match_len - lz_min_match;
        const std::uint8_t ml_nib = ml < 15 ? static_cast<std::uint8_t>(ml) : 15;
        out.push_back(static_cast<std::uint8_t>((lit_nib << 4) | ml_nib));
        if (lit_nib == 15) lz_put_length(out, lit - 15);
        out.insert(out.end(), in.begin() + anchor, in.begin() + pos);
        out.push_back(static_cast<std::uint8_t>(offset & 0xff));
        out.push_back(static_cast<std::uint8_t>(offset >> 8));
        if (ml_nib == 15) lz_put_length(out, ml - 15);
    };

    while (n >= lz_min_match && pos + lz_min_match <= n) {
        const std::uint32_t h = lz_hash(in.data() + pos);
        const std::int64_t cand = table[h];
        table[h] = static_cast<std::int64_t>(pos);
        if (cand >= 0 && pos - static_cast<std::size_t>(cand) <= lz_max_offset &&
            std::memcmp(in.data() + cand, in.data() + pos, lz_min_match) == 0) {
            std::size_t len = lz_min_match;
            while (pos + len < n && in[cand + len] == in[pos + len]) ++len;
            const std::size_t offset = pos - static_cast<std::size_t>(cand);
            emit(len, offset);
            pos += len;
            anchor = pos;
            continue;
        }
        ++pos;
    }
    pos = n;
    if (anchor < n) emit(0, 0);
    return out;
}

inline void lz_decode_chunk(std::span<const std::uint8_t> in, std::size_t raw_len,
                            std::vector<std::uint8_t>& out) {
    out.clear();
    out.reserve(raw_len);
    std::size_t p = 0;
    auto need = [&](std::size_t k) {
        if (p + k > in.size()) throw corrupt_stream_error("lz_decode: truncated chunk");
    };
    auto get_length = [&](std::size_t base) {
        std::size_t len = base;
        if (base == 15) {
            std::uint8_t b;
            do {
                need(1);
                b = in[p++];
                len += b;
            } while (b == 255);
        }
        return len;
    };
    while (out.size() < raw_len) {
        need(1);
        const std::uint8_t token = in[p++];
        const std::size_t lit = get_length(token >> 4);
        need(lit);
        out.insert(out.end(), in.begin() + p, in.begin() + p + lit);
        p += lit;
        if (out.size() == raw_len) break;
        if (out.size() > raw_len) throw corrupt_stream_error("lz_decode: raw_len overrun");
        need(2);
        const std::size_t offset = in[p] | (std::size_t{in[p + 1]} << 8);
        p += 2;
        const std::size_t match_len = get_length(token & 0x0f) + lz_min_match;
        if (offset == 0 || offset > out.size())
            throw corrupt_stream_error("lz_decode: bad match offset");
        if (out.size() + match_len > raw_len)
            throw corrupt_stream_error("lz_decode: raw_len overrun");
        std::size_t src = out.size() - offset;
        for (std::size_t i = 0; i < match_len; ++i) out.push_back(out[src + i]);
    }
    if (p != in.size()) throw corrupt_stream_error("lz_decode: trailing bytes");
}

}  // namespace detail

/// Chunk the input and compress each chunk independently.
inline LzStream lz_encode(std::span<const std::uint8_t> data, std::size_t chunk_size) {
    if (chunk_size == 0) throw std::invalid_argument("lz_encode: chunk_size must be > 0");
    LzStream s;
    s.chunk_size = chunk_size;
    for (std::size_t off = 0; off < data.size(); off += chunk_size) {
        const std::size_t len = std::min(chunk_size, data.size() - off);
        LzChunk c;
        c.raw_len = static_cast<std::uint32_t>(len);
        c.payload = detail::lz_encode_chunk(data.subspan(off, len));
        s.chunks.push_back(std::move(c));
    }
    return s;
}

inline std::vector<std::uint8_t> lz_decode(const LzStream& s) {
    std::vector<std::uint8_t> out, chunk;
    for (const auto& c : s.chunks) {
        detail::lz_decode_chunk(c.payload, c.raw_len, chunk);
        out.insert(out.end(), chunk.begin(), chunk.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// CompressedPatch + container file
// ---------------------------------------------------------------------------

enum class Codec : std::uint32_t { csr = 1, lz = 2 };

inline Codec parse_codec(const std::string& s) {
    if (s == "csr") return Codec::csr;
    if (s == "lz") return Codec::lz;
    throw std::invalid_argument("unknown codec: " + s);
}

/// Losslessly encoded coefficient arrays of one patch (all components).
struct CompressedPatch {
    Codec codec = Codec::csr;
    std::vector<std::size_t> dims;
    std::uint32_t components = 1;
    std::uint32_t levels = 0;
    std::vector<CsrBlock> csr;   // one per component
    std::vector<LzStream> lz;    // one per component

    std::size_t coefficient_count() const { return Field::count(dims); }
    std::size_t dense_bytes() const { return 8 * coefficient_count() * components; }

    std::size_t compressed_bytes() const {
        std::size_t s = 0;
        for (const auto& b : csr) s += b.byte_size();
        for (const auto& b : lz) s += b.byte_size();
        return s;
    }
};

/// N-D arrays are viewed as rows = product of leading dims, cols = last dim.
inline std::pair<std::size_t, std::size_t> csr_view_shape(std::span<const std::size_t> dims) {
    std::size_t rows = 1;
    for (std::size_t d = 0; d + 1 < dims.size(); ++d) rows *= dims[d];
    return {rows, dims.empty() ? 1 : dims.back()};
}

inline CompressedPatch
encode_patch(std::span<const std::vector<double>> comps,
             std::span<const std::size_t> dims, std::uint32_t levels, Codec codec,
             std::size_t chunk_size = 64 * 1024) {
    CompressedPatch p;
    p.codec = codec;
    p.dims.assign(dims.begin(), dims.end());
    p.components = static_cast<std::uint32_t>(comps.size());
    p.levels = levels;
    const auto [rows, cols] = csr_view_shape(dims);
    for (const auto& c : comps) {
        if (c.size() != Field::count(dims))
            throw std::invalid_argument("encode_patch: component size mismatch");
        if (codec == Codec::csr) {
            p.csr.push_back(csr_encode(c, rows, cols));
        } else {
            const auto* bytes = reinterpret_cast<const std::uint8_t*>(c.data());
            p.lz.push_back(lz_encode({bytes, c.size() * sizeof(double)}, chunk_size));
        }
    }
    return p;
}

inline std::vector<std::vector<double>> decode_patch(const CompressedPatch& p) {
    std::vector<std::vector<double>> comps;
    comps.reserve(p.components);
    if (p.codec == Codec::csr) {
        for (const auto& b : p.csr) comps.push_back(csr_decode(b));
    } else {
        const std::size_t count = p.coefficient_count();
        for (const auto& s : p.lz) {
            const auto bytes = lz_decode(s);
            if (bytes.size() != count * sizeof(double))
                throw corrupt_stream_error("decode_patch: payload size mismatch");
            std::vector<double> c(count);
            std::memcpy(c.data(), bytes.data(), bytes.size());
            comps.push_back(std::move(c));
        }
    }
    return comps;
}

// --- WGC1 container, little-endian throughout --------------------------------

namespace detail {

template <typename T>
void put(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw corrupt_stream_error("unexpected end of stream");
    return v;
}

template <typename T>
void put_array(std::ostream& os, std::span<const T> a) {
    put<std::uint64_t>(os, a.size());
    os.write(reinterpret_cast<const char*>(a.data()),
             static_cast<std::streamsize>(a.size() * sizeof(T)));
}

template <typename T>
std::vector<T> get_array(std::istream& is) {
    const auto n = get<std::uint64_t>(is);
    std::vector<T> a(n);
    is.read(reinterpret_cast<char*>(a.data()),
            static_cast<std::streamsize>(n * sizeof(T)));
    if (!is) throw corrupt_stream_error("unexpected end of stream");
    return a;
}

}  // namespace detail

inline void save_wgc(std::ostream& os, const CompressedPatch& p) {
    os.write("WGC1", 4);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(p.codec));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(p.dims.size()));
    for (auto d : p.dims) detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    detail::put<std::uint32_t>(os, p.components);
    detail::put<std::uint32_t>(os, p.levels);
    if (p.codec == Codec::csr) {
        for (const auto& b : p.csr) {
            detail::put<std::uint32_t>(os, b.rows);
            detail::put<std::uint32_t>(os, b.cols);
            detail::put_array<double>(os, b.v);
            detail::put_array<std::uint32_t>(os, b.col);
            detail::put_array<std::uint32_t>(os, b.row);
        }
    } else {
        for (const auto& s : p.lz) {
            detail::put<std::uint64_t>(os, s.chunk_size);
            detail::put<std::uint64_t>(os, s.chunks.size());
            for (const auto& c : s.chunks) {
                detail::put<std::uint32_t>(os, c.raw_len);
                detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(c.payload.size()));
                os.write(reinterpret_cast<const char*>(c.payload.data()),
                         static_cast<std::streamsize>(c.payload.size()));
            }
        }
    }
}

inline CompressedPatch load_wgc(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "WGC1", 4) != 0)
        throw corrupt_stream_error("not a WGC1 file");
    CompressedPatch p;
    const auto codec = detail::get<std::uint32_t>(is);
    if (codec != 1 && codec != 2) throw corrupt_stream_error("unknown codec id");
    p.codec = static_cast<Codec>(codec);
    const auto ndims = detail::get<std::uint32_t>(is);
    p.dims.resize(ndims);
    for (auto& d : p.dims) d = detail::get<std::uint32_t>(is);
    p.components = detail::get<std::uint32_t>(is);
    p.levels = detail::get<std::uint32_t>(is);
    for (std::uint32_t c = 0; c < p.components; ++c) {
        if (p.codec == Codec::csr) {
            CsrBlock b;
            b.rows = detail::get<std::uint32_t>(is);
            b.cols = detail::get<std::uint32_t>(is);
            b.v = detail::get_array<double>(is);
            b.col = detail::get_array<std::uint32_t>(is);
            b.row = detail::get_array<std::uint32_t>(is);
            p.csr.push_back(std::move(b));
        } else {
            LzStream s;
            s.chunk_size = detail::get<std::uint64_t>(is);
            const auto nchunks = detail::get<std::uint64_t>(is);
            for (std::uint64_t i = 0; i < nchunks; ++i) {
                LzChunk ch;
                ch.raw_len = detail::get<std::uint32_t>(is);
                const auto enc_len = detail::get<std::uint32_t>(is);
                ch.payload.resize(enc_len);
                is.read(reinterpret_cast<char*>(ch.payload.data()), enc_len);
                if (!is) throw corrupt_stream_error("truncated LZ chunk");
                s.chunks.push_back(std::move(ch));
            }
            p.lz.push_back(std::move(s));
        }
    }
    return p;
}

inline void save_wgc(const std::string& path, const CompressedPatch& p) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    save_wgc(os, p);
}

inline CompressedPatch load_wgc(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return load_wgc(is);
}

}  // namespace wavegrid
