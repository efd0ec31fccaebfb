#include <doctest.h>

#include <random>
#include <sstream>

#include "wavegrid/codec.hpp"

using namespace wavegrid;

namespace {

std::vector<std::uint8_t> random_bytes(std::size_t n, std::mt19937& rng) {
    std::uniform_int_distribution<int> dist(0, 255);
    std::vector<std::uint8_t> b(n);
    for (auto& v : b) v = static_cast<std::uint8_t>(dist(rng));
    return b;
}

}  // namespace

TEST_CASE("CSR of a zero matrix") {
    const std::vector<double> zeros(9, 0.0);
    const auto b = csr_encode(zeros, 3, 3);
    CHECK(b.v.empty());
    CHECK(b.col.empty());
    CHECK(b.row == std::vector<std::uint32_t>{0, 0, 0, 0});
    CHECK(csr_decode(b) == zeros);
}

TEST_CASE("CSR of the identity") {
    const std::vector<double> eye{1, 0, 0, 0, 1, 0, 0, 0, 1};
    const auto b = csr_encode(eye, 3, 3);
    CHECK(b.v == std::vector<double>{1, 1, 1});
    CHECK(b.col == std::vector<std::uint32_t>{0, 1, 2});
    CHECK(b.row == std::vector<std::uint32_t>{0, 1, 2, 3});
    CHECK(csr_decode(b) == eye);
}

TEST_CASE("CSR round-trips and counts nonzeros exactly") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> val(-5.0, 5.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (int it = 0; it < 50; ++it) {
        const std::size_t rows = 1 + it % 13, cols = 1 + (3 * it) % 17;
        std::vector<double> m(rows * cols, 0.0);
        std::size_t nnz = 0;
        for (auto& x : m)
            if (coin(rng) < 0.3) {
                x = val(rng);
                if (x != 0.0) ++nnz;
            }
        const auto b = csr_encode(m, rows, cols);
        CHECK(b.nnz() == nnz);
        CHECK(b.byte_size() == 12 * nnz + 4 * (rows + 1));
        CHECK(csr_decode(b) == m);
    }
}

TEST_CASE("corrupt CSR blocks are rejected") {
    auto b = csr_encode(std::vector<double>{1, 0, 0, 1}, 2, 2);
    SUBCASE("bad column") {
        b.col[0] = 5;
        CHECK_THROWS_AS(csr_decode(b), corrupt_stream_error);
    }
    SUBCASE("bad offsets") {
        b.row.back() = 9;
        CHECK_THROWS_AS(csr_decode(b), corrupt_stream_error);
    }
}

TEST_CASE("LZ round-trips arbitrary byte strings") {
    std::mt19937 rng(19);
    SUBCASE("empty input has no chunks") {
        const auto s = lz_encode({}, 1024);
        CHECK(s.chunks.empty());
        CHECK(lz_decode(s).empty());
    }
    SUBCASE("random and adversarial patterns") {
        for (int it = 0; it < 200; ++it) {
            std::vector<std::uint8_t> data;
            switch (it % 5) {
                case 0: data = random_bytes(1 + (it * 37) % 5000, rng); break;
                case 1: data.assign(1 + (it * 53) % 5000, 0); break;
                case 2:  // short repeating period
                    for (int i = 0; i < 3000; ++i)
                        data.push_back(static_cast<std::uint8_t>(i % 3));
                    break;
                case 3:  // runs with scattered noise
                    data.assign(4096, 0xAA);
                    for (int i = 0; i < 40; ++i) data[(i * 101) % 4096] = random_bytes(1, rng)[0];
                    break;
                case 4: data = random_bytes(1 + it % 7, rng); break;
            }
            const auto s = lz_encode(data, 512);
            CHECK(lz_decode(s) == data);
        }
    }
}

TEST_CASE("a zero megabyte compresses below two percent") {
    const std::vector<std::uint8_t> zeros(1 << 20, 0);
    const auto s = lz_encode(zeros, 64 * 1024);
    CHECK(s.chunks.size() == 16);
    CHECK(s.byte_size() < zeros.size() / 50);
}

TEST_CASE("incompressible input stays within the framing bound") {
    std::mt19937 rng(23);
    const auto data = random_bytes(100 * 1000, rng);
    const auto s = lz_encode(data, 64 * 1024);
    std::size_t enc = 0;
    for (const auto& c : s.chunks) {
        // literal-run framing: one token plus one extension byte per 255 literals
        CHECK(c.payload.size() <= c.raw_len + c.raw_len / 255 + 16);
        enc += c.payload.size();
    }
    CHECK(enc >= data.size() / 2);  // really incompressible
}

TEST_CASE("chunks decode independently") {
    std::mt19937 rng(29);
    auto data = random_bytes(10000, rng);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = data[i % 777];
    const auto s = lz_encode(data, 1024);
    REQUIRE(s.chunks.size() > 3);
    LzStream prefix{s.chunk_size, {s.chunks.begin(), s.chunks.begin() + 3}};
    const auto out = lz_decode(prefix);
    CHECK(out.size() == 3 * 1024);
    CHECK(std::equal(out.begin(), out.end(), data.begin()));
}

TEST_CASE("truncated LZ chunks are rejected") {
    const std::vector<std::uint8_t> data(300, 7);
    auto s = lz_encode(data, 1024);
    s.chunks[0].payload.pop_back();
    CHECK_THROWS_AS(lz_decode(s), corrupt_stream_error);
}

TEST_CASE("patch encode/decode and the container file") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    std::vector<std::vector<double>> comps(3, std::vector<double>(9 * 9, 0.0));
    for (auto& c : comps)
        for (std::size_t i = 0; i < c.size(); i += 4) c[i] = val(rng);
    const std::vector<std::size_t> dims{9, 9};

    for (Codec codec : {Codec::csr, Codec::lz}) {
        const auto p = encode_patch(comps, dims, 2, codec, 128);
        const auto back = decode_patch(p);
        REQUIRE(back.size() == comps.size());
        for (std::size_t c = 0; c < comps.size(); ++c) CHECK(back[c] == comps[c]);

        std::stringstream ss;
        save_wgc(ss, p);
        const auto loaded = load_wgc(ss);
        CHECK(loaded.dims == dims);
        CHECK(loaded.levels == 2);
        const auto back2 = decode_patch(loaded);
        for (std::size_t c = 0; c < comps.size(); ++c) CHECK(back2[c] == comps[c]);
    }
}

TEST_CASE("compressed size accounting") {
    // all-zero 65x65 single component: CSR holds only the 66 row offsets
    const std::vector<std::vector<double>> comps{std::vector<double>(65 * 65, 0.0)};
    const auto p = encode_patch(comps, std::vector<std::size_t>{65, 65}, 4, Codec::csr);
    CHECK(p.compressed_bytes() == 4 * 66);
    CHECK(p.dense_bytes() == 65 * 65 * 8);
}
