#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "wavegrid/pipeline.hpp"

using namespace wavegrid;
namespace fs = std::filesystem;

namespace {

RunConfig small_transport() {
    RunConfig cfg;
    cfg.sim.scheme = Scheme::transport;
    cfg.sim.nx = 33;
    cfg.sim.splits = {2, 2};
    cfg.sim.t_end = 0.05;
    cfg.levels = 3;
    cfg.spec = {ThresholdMode::capped, 0.01};
    return cfg;
}

fs::path temp_dir(const char* tag) {
    const auto p = fs::temp_directory_path() / (std::string("wavegrid_test_") + tag);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("a zero threshold run is bit-identical to no compression") {
    RunConfig with = small_transport();
    with.spec.c = 0.0;
    RunConfig without = small_transport();
    without.no_compression = true;

    const auto a = run(with);
    const auto b = run(without);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t s = 0; s < a.rows.size(); ++s) {
        CHECK(a.rows[s].l2 == b.rows[s].l2);
        CHECK(a.rows[s].global_mass == b.rows[s].global_mass);
        CHECK(a.rows[s].zeroed == 0);
    }
    for (std::size_t pi = 0; pi < a.grid.patches.size(); ++pi)
        for (std::size_t c = 0; c < a.grid.components; ++c) {
            const auto fa = extract_logical(a.grid.patches[pi], c);
            const auto fb = extract_logical(b.grid.patches[pi], c);
            CHECK(fa.values == fb.values);
        }
}

TEST_CASE("runs are deterministic and thread-count independent") {
    RunConfig cfg = small_transport();
    const auto a = run(cfg);
    const auto b = run(cfg);
    cfg.threads = 4;
    const auto c = run(cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    REQUIRE(a.rows.size() == c.rows.size());
    for (std::size_t s = 0; s < a.rows.size(); ++s) {
        for (const auto* other : {&b.rows[s], &c.rows[s]}) {
            CHECK(a.rows[s].l2 == other->l2);
            CHECK(a.rows[s].global_mass == other->global_mass);
            CHECK(a.rows[s].compressed_bytes == other->compressed_bytes);
            CHECK(a.rows[s].nnz == other->nnz);
        }
    }
}

TEST_CASE("strict mode accepts a healthy run") {
    RunConfig cfg = small_transport();
    cfg.strict = true;
    CHECK_NOTHROW(run(cfg));
}

TEST_CASE("metrics CSV has the documented schema") {
    const auto dir = temp_dir("metrics");
    RunConfig cfg = small_transport();
    cfg.sim.t_end = 0.02;
    cfg.metrics_path = (dir / "m.csv").string();
    const auto r = run(cfg);
    std::ifstream is(cfg.metrics_path);
    REQUIRE(is.good());
    std::string header;
    std::getline(is, header);
    CHECK(header ==
          "step,time,dense_bytes,compressed_bytes,ratio,nnz,zeroed,global_mass,l2_error");
    std::size_t lines = 0;
    for (std::string line; std::getline(is, line);)
        if (!line.empty()) ++lines;
    CHECK(lines == r.rows.size());
}

TEST_CASE("the observer sees every step") {
    RunConfig cfg = small_transport();
    std::size_t calls = 0;
    cfg.observer = [&](const PatchGrid& g, const MetricsRow& row) {
        ++calls;
        CHECK(row.step == calls);
        CHECK(g.patches.size() == 4);
    };
    const auto r = run(cfg);
    CHECK(calls == r.rows.size());
}

TEST_CASE("snapshots are written at the requested times") {
    const auto dir = temp_dir("snaps");
    RunConfig cfg = small_transport();
    cfg.sim.t_end = 0.04;
    cfg.snapshot_times = {0.0, 0.02, 0.04};
    cfg.snapshot_prefix = (dir / "s_").string();
    run(cfg);
    CHECK(fs::exists(dir / "s_t0.000.wgrd"));
    CHECK(fs::exists(dir / "s_t0.020.wgrd"));
    CHECK(fs::exists(dir / "s_t0.040.wgrd"));
    const auto comps = load_wgrd((dir / "s_t0.000.wgrd").string());
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].dims == std::vector<std::size_t>{33, 33});
    // the t=0 snapshot is the initial condition
    const SimConfig sim = small_transport().sim;
    CHECK(comps[0].values == exact_transport(0.0, sim).values);
}

TEST_CASE("transform/restore files round-trip") {
    const auto dir = temp_dir("files");
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Field f{{33, 33}};
    for (auto& v : f.values) v = dist(rng);
    const auto grd = (dir / "in.wgrd").string();
    const auto wgc = (dir / "out.wgc").string();
    const auto back = (dir / "back.wgrd").string();
    save_wgrd(grd, {&f, 1});

    SUBCASE("zero threshold reconstructs to a few ulps") {
        for (Codec codec : {Codec::csr, Codec::lz}) {
            transform_file(grd, 3, {ThresholdMode::capped, 0.0}, codec, 64 * 1024, wgc);
            restore_file(wgc, back);
            const auto r = load_wgrd(back);
            REQUIRE(r.size() == 1);
            double worst = 0.0;
            for (std::size_t i = 0; i < f.size(); ++i)
                worst = std::max(worst, std::abs(r[0].values[i] - f.values[i]));
            CHECK(worst <= 1e-14);
        }
    }
    SUBCASE("thresholding keeps the trapezoid mass") {
        transform_file(grd, 3, {ThresholdMode::capped, 0.1}, Codec::csr, 64 * 1024, wgc);
        restore_file(wgc, back);
        const auto r = load_wgrd(back);
        const double m0 = trapezoid_mass_nd(f);
        CHECK(std::abs(trapezoid_mass_nd(r[0]) - m0) <=
              1e-12 * std::max(std::abs(m0), 1.0));
    }
}

TEST_CASE("a one-point sweep reproduces a direct run") {
    const auto dir = temp_dir("sweep");
    SweepConfig sc;
    sc.base = small_transport();
    sc.thresholds = {0.01};
    sc.levels = {3};
    sc.codecs = {Codec::csr};
    sc.out_dir = dir.string();
    const auto table = sweep(sc);
    REQUIRE(table.size() == 1);

    RunConfig rc = small_transport();
    const auto r = run(rc);
    CHECK(table[0].avg_ratio == r.summary.avg_ratio);
    CHECK(table[0].final_l2 == r.rows.back().l2);
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK(fs::exists(dir / "run_csr_L3_c0.01.csv"));
}

TEST_CASE("demo reconstruction keeps the mass when nothing is thresholded") {
    const auto rep = demo_discontinuous("", 0.0);
    CHECK(rep.total == 129 * 129);
    CHECK(rep.nonzeros > 10000);
    CHECK(std::abs(rep.mass_after - rep.mass_before) <=
          1e-12 * std::abs(rep.mass_before));
}

TEST_CASE("demo compresses the discontinuous field") {
    const auto dir = temp_dir("demo");
    const auto rep = demo_discontinuous(dir.string());
    CHECK(rep.total == 16641);
    CHECK(rep.nonzeros >= 457);
    CHECK(rep.nonzeros <= 505);
    CHECK(rep.coefficient_ratio ==
          doctest::Approx(16641.0 / rep.nonzeros).epsilon(1e-14));
    CHECK(std::abs(rep.mass_after - rep.mass_before) <=
          1e-12 * std::max(std::abs(rep.mass_before), 1.0));
    CHECK(fs::exists(dir / "original.wgrd"));
    CHECK(fs::exists(dir / "reconstructed.wgrd"));
    CHECK(fs::exists(dir / "report.txt"));
}

TEST_CASE("a short dam-break run conserves water volume") {
    RunConfig cfg;
    cfg.sim.scheme = Scheme::swe;
    cfg.sim.nx = 33;
    cfg.sim.splits = {2, 2};
    cfg.sim.t_end = 0.05;
    cfg.levels = 3;
    cfg.spec = {ThresholdMode::constant, 0.0005};
    const auto r = run(cfg);
    REQUIRE(!r.rows.empty());
    // initial volume: trapezoid sum of h; the raised square covers grid
    // points 8..24 in each direction (17x17 points of +1 at full weight)
    const double m0 = 32.0 * 32.0 + 17.0 * 17.0;
    for (const auto& row : r.rows)
        CHECK(std::abs(row.global_mass - m0) <= 1e-10 * m0);
}
