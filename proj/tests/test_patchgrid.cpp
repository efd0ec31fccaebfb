#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "wavegrid/patchgrid.hpp"
#include "wavegrid/threshold.hpp"

using namespace wavegrid;

TEST_CASE("decompose geometry") {
    SUBCASE("129x129 split 2x2") {
        const auto g = decompose({129, 129}, {2, 2}, 1);
        REQUIRE(g.patches.size() == 4);
        for (const auto& p : g.patches) {
            CHECK(p.logical == std::vector<std::size_t>{65, 65});
            CHECK(p.true_dims == std::vector<std::size_t>{67, 67});
        }
        CHECK(g.patches[0].origin == std::vector<std::size_t>{0, 0});
        CHECK(g.patches[1].origin == std::vector<std::size_t>{0, 64});
        CHECK(g.patches[2].origin == std::vector<std::size_t>{64, 0});
        CHECK(g.patches[3].origin == std::vector<std::size_t>{64, 64});
    }
    SUBCASE("single patch keeps the whole grid") {
        const auto g = decompose({5}, {1}, 2);
        REQUIRE(g.patches.size() == 1);
        CHECK(g.patches[0].logical == std::vector<std::size_t>{5});
        CHECK(g.patches[0].true_dims == std::vector<std::size_t>{7});
        CHECK(g.patches[0].comps.size() == 2);
    }
    SUBCASE("neighbors share one boundary layer") {
        const auto g = decompose({9}, {2}, 1);
        // global index 4 belongs to both patches
        CHECK(g.patches[0].origin[0] + g.patches[0].logical[0] - 1 == 4);
        CHECK(g.patches[1].origin[0] == 4);
    }
    SUBCASE("invalid splits are rejected") {
        CHECK_THROWS_AS(decompose({10}, {2}, 1), std::invalid_argument);
        CHECK_THROWS_AS(decompose({13}, {2}, 1), std::invalid_argument);  // 7 = not 2^k+1
        CHECK_THROWS_AS(decompose({9}, {0}, 1), std::invalid_argument);
    }
}

TEST_CASE("ghost sync in one dimension") {
    // Values 0..8 over two patches of logical length 5 sharing global index 4.
    auto g = decompose({9}, {2}, 1, /*periodic=*/true);
    fill(g, 0, [](std::span<const std::size_t> idx) {
        return static_cast<double>(idx[0]);
    });
    sync_ghosts(g);

    const auto& left = g.patches[0].comps[0].values;   // true length 7
    const auto& right = g.patches[1].comps[0].values;
    // left patch owns globals 0..4; its high ghost is the right patch's
    // first interior cell past the shared boundary (global 5)
    CHECK(left[6] == 5.0);
    // right patch owns globals 4..8; its low ghost is global 3
    CHECK(right[0] == 3.0);
    // periodic wrap: left low ghost comes from the right patch (global 7,
    // the second-to-last point, since 8 and 0 coincide), and vice versa
    CHECK(left[0] == 7.0);
    CHECK(right[6] == 1.0);
    // interior cells untouched
    for (std::size_t i = 1; i <= 5; ++i) {
        CHECK(left[i] == static_cast<double>(i - 1));
        CHECK(right[i] == static_cast<double>(i + 3));
    }
}

TEST_CASE("single periodic patch wraps onto itself") {
    auto g = decompose({5}, {1}, 1, /*periodic=*/true);
    fill(g, 0, [](std::span<const std::size_t> idx) {
        return 10.0 + static_cast<double>(idx[0]);
    });
    sync_ghosts(g);
    const auto& v = g.patches[0].comps[0].values;
    CHECK(v[0] == 13.0);  // below global 0 sits global 3
    CHECK(v[6] == 11.0);  // above global 4 sits global 1
}

TEST_CASE("non-periodic edge ghosts are zero-gradient") {
    auto g = decompose({5}, {1}, 1, /*periodic=*/false);
    fill(g, 0, [](std::span<const std::size_t> idx) {
        return static_cast<double>(idx[0] * idx[0]);
    });
    sync_ghosts(g);
    const auto& v = g.patches[0].comps[0].values;
    CHECK(v[0] == v[1]);
    CHECK(v[6] == v[5]);
}

TEST_CASE("2-D corner ghosts are consistent after sync") {
    auto g = decompose({9, 9}, {2, 2}, 1);
    fill(g, 0, [](std::span<const std::size_t> idx) {
        return static_cast<double>(idx[0] * 100 + idx[1]);
    });
    sync_ghosts(g);
    // patch (0,0) high-high corner ghost should hold global (5, 5)
    const auto& p = g.patches[0];
    CHECK(p.comps[0].values[6 * 7 + 6] == 505.0);
    // its low-low corner wraps periodically to global (7, 7)
    CHECK(p.comps[0].values[0] == 707.0);
}

TEST_CASE("assemble round-trips fill and detects disagreement") {
    auto g = decompose({17, 17}, {2, 2}, 1);
    fill(g, 0, [](std::span<const std::size_t> idx) {
        return std::sin(0.3 * static_cast<double>(idx[0])) +
               static_cast<double>(idx[1]);
    });
    const auto before = assemble(g, 0);
    sync_ghosts(g);
    const auto after = assemble(g, 0);
    CHECK(before.values == after.values);
    for (std::size_t i = 0; i < 17; ++i)
        for (std::size_t j = 0; j < 17; ++j)
            CHECK(after.values[i * 17 + j] ==
                  std::sin(0.3 * static_cast<double>(i)) + static_cast<double>(j));

    // poke one shared boundary cell in a single owner: patch (0,0) has
    // logical 9x9 (true 11x11); true (3,9) is global (2,8), the column
    // shared with patch (0,1)
    g.patches[0].comps[0].values[3 * 11 + 9] += 1.0;
    CHECK_THROWS_AS(assemble(g, 0), consistency_error);
}

TEST_CASE("global mass of a constant field equals the cell count") {
    auto g = decompose({129, 129}, {2, 2}, 1);
    fill(g, 0, [](std::span<const std::size_t>) { return 1.0; });
    // trapezoid weights integrate a constant to (n-1)^2 cells
    CHECK(global_mass(g, 0) == doctest::Approx(128.0 * 128.0).epsilon(1e-13));
}

TEST_CASE("global mass is independent of the decomposition") {
    auto one = decompose({65, 65}, {1, 1}, 1);
    auto four = decompose({65, 65}, {2, 2}, 1);
    auto init = [](std::span<const std::size_t> idx) {
        const double x = static_cast<double>(idx[0]) / 64.0;
        const double y = static_cast<double>(idx[1]) / 64.0;
        return 1.0 + std::exp(-8.0 * ((x - 0.4) * (x - 0.4) + (y - 0.6) * (y - 0.6)));
    };
    fill(one, 0, init);
    fill(four, 0, init);
    const double m1 = global_mass(one, 0);
    const double m4 = global_mass(four, 0);
    CHECK(std::abs(m1 - m4) <= 1e-13 * std::abs(m1));
}

TEST_CASE("extract/insert of the logical block round-trips") {
    auto g = decompose({9, 9}, {2, 2}, 1);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& p : g.patches)
        for (auto& v : p.comps[0].values) v = dist(rng);
    auto& p = g.patches[2];
    const auto snapshot = p.comps[0].values;
    const Field block = extract_logical(p, 0);
    CHECK(block.dims == p.logical);
    insert_logical(p, 0, block);
    CHECK(p.comps[0].values == snapshot);
}

TEST_CASE("per-patch compression cycle preserves the global mass") {
    auto g = decompose({65, 65}, {2, 2}, 1);
    fill(g, 0, [](std::span<const std::size_t> idx) {
        const double x = static_cast<double>(idx[0]) / 64.0;
        const double y = static_cast<double>(idx[1]) / 64.0;
        return x < 0.5 && y < 0.5 ? 2.0 : 1.0;
    });
    const double before = global_mass(g, 0);
    for (auto& p : g.patches) {
        auto cs = dwt_nd(extract_logical(p, 0), {p.logical, 4});
        apply_threshold(cs, {ThresholdMode::capped, 0.05});
        insert_logical(p, 0, idwt_nd(cs));
    }
    const double after = global_mass(g, 0);
    CHECK(std::abs(after - before) <= 1e-12 * std::abs(before));
}

TEST_CASE("WGRD files round-trip") {
    std::vector<Field> comps(2, Field{{5, 9}});
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (auto& f : comps)
        for (auto& v : f.values) v = dist(rng);
    std::stringstream ss;
    save_wgrd(ss, comps);
    const auto back = load_wgrd(ss);
    REQUIRE(back.size() == 2);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(back[c].dims == comps[c].dims);
        CHECK(back[c].values == comps[c].values);
    }
    std::stringstream bad("WGRX");
    CHECK_THROWS_AS(load_wgrd(bad), corrupt_stream_error);
}
