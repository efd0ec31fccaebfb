#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "wavegrid/codec.hpp"
#include "wavegrid/patchgrid.hpp"
#include "wavegrid/solver.hpp"
#include "wavegrid/threshold.hpp"
#include "wavegrid/wavelet.hpp"

namespace wavegrid {

struct RunConfig {
    SimConfig sim;
    int levels = 4;
    ThresholdSpec spec{};
    Codec codec = Codec::csr;
    std::size_t chunk_size = 64 * 1024;
    bool no_compression = false;
    bool strict = false;
    unsigned threads = 1;
    std::string metrics_path;          // empty: keep rows in memory only
    std::vector<double> snapshot_times;
    std::string snapshot_prefix;       // files <prefix>t<time>.wgrd
    bool csv_snapshots = false;
    /// Called after every step's metrics row; used by invariant checks.
    std::function<void(const PatchGrid&, const struct MetricsRow&)> observer;
};

struct MetricsRow {
    std::size_t step = 0;
    double time = 0.0;
    std::size_t dense_bytes = 0;
    std::size_t compressed_bytes = 0;
    double ratio = 1.0;
    std::size_t nnz = 0;
    std::size_t zeroed = 0;
    double global_mass = 0.0;
    double l2 = 0.0;
};

struct RunSummary {
    double avg_ratio = 1.0;
    double total_seconds = 0.0;
    double step_seconds = 0.0;
    double dwt_seconds = 0.0;
    double threshold_seconds = 0.0;
    double codec_seconds = 0.0;
    /// (total - pure step time) / step time, the Table-1 style overhead row.
    double overhead() const {
        return step_seconds > 0.0 ? (total_seconds - step_seconds) / step_seconds : 0.0;
    }
};

struct RunResult {
    std::vector<MetricsRow> rows;
    RunSummary summary;
    PatchGrid grid;
    double t_final = 0.0;
};

namespace detail {

inline void write_metrics_header(std::ostream& os) {
    os << "step,time,dense_bytes,compressed_bytes,ratio,nnz,zeroed,global_mass,l2_error\n";
}

inline void write_metrics_row(std::ostream& os, const MetricsRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%zu,%zu,%.17g,%zu,%zu,%.17g,%.17g\n",
                  r.step, r.time, r.dense_bytes, r.compressed_bytes, r.ratio,
                  r.nnz, r.zeroed, r.global_mass, r.l2);
    os << buf;
}

/// Run fn(patch_index) for every patch, optionally on a small thread pool.
/// Results must be written to per-patch slots; reduction happens serially.
inline void for_each_patch(std::size_t count, unsigned threads,
                           const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    const unsigned n = std::min<unsigned>(threads, static_cast<unsigned>(count));
    for (unsigned t = 0; t < n; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                fn(i);
        });
    for (auto& th : pool) th.join();
}

inline void write_field_csv(const std::string& path, const Field& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    if (f.rank() != 2) throw std::invalid_argument("write_field_csv: 2-D only");
    for (std::size_t i = 0; i < f.dims[0]; ++i)
        for (std::size_t j = 0; j < f.dims[1]; ++j)
            os << f.values[i * f.dims[1] + j] << (j + 1 < f.dims[1] ? ',' : '\n');
}

struct PhaseTimer {
    using clock = std::chrono::steady_clock;
    clock::time_point t0 = clock::now();
    double lap() {
        const auto t1 = clock::now();
        const double s = std::chrono::duration<double>(t1 - t0).count();
        t0 = t1;
        return s;
    }
};

}  // namespace detail

/// The per-time-step experiment loop: sync ghosts, FV step per patch, then a
/// compress/decompress cycle on every patch's logical block.
inline RunResult run(const RunConfig& cfg) {
    cfg.sim.validate();
    const std::size_t m = cfg.sim.component_count();
    PatchGrid grid = decompose({cfg.sim.nx, cfg.sim.nx}, cfg.sim.splits, m);
    const double dx = cfg.sim.dx();

    WaveletPlan plan{grid.patches[0].logical, cfg.levels};
    plan.validate();

    // initial state
    if (cfg.sim.scheme == Scheme::transport) {
        const Field init = exact_transport(0.0, cfg.sim);
        fill(grid, 0, [&](std::span<const std::size_t> gi) {
            return init.values[gi[0] * cfg.sim.nx + gi[1]];
        });
    } else {
        // dam break: centered square of half the domain side with h = 2,
        // h = 1 outside (coordinates relative to the domain length)
        fill(grid, 0, [&](std::span<const std::size_t> gi) {
            const double x = gi[0] * dx / cfg.sim.domain_length;
            const double y = gi[1] * dx / cfg.sim.domain_length;
            const bool inside = std::abs(x - 0.5) <= 0.25 && std::abs(y - 0.5) <= 0.25;
            return inside ? 2.0 : 1.0;
        });
        fill(grid, 1, [](auto) { return 0.0; });
        fill(grid, 2, [](auto) { return 0.0; });
    }

    PatchGrid scratch = grid;  // double buffer for fv_step

    RunResult res;
    std::ofstream metrics;
    if (!cfg.metrics_path.empty()) {
        metrics.open(cfg.metrics_path);
        if (!metrics) throw std::runtime_error("cannot open metrics file: " + cfg.metrics_path);
        detail::write_metrics_header(metrics);
    }

    std::vector<char> snapshot_done(cfg.snapshot_times.size(), 0);
    auto maybe_snapshot = [&](double t) {
        for (std::size_t s = 0; s < cfg.snapshot_times.size(); ++s) {
            if (snapshot_done[s] || t < cfg.snapshot_times[s] - 1e-9) continue;
            snapshot_done[s] = 1;
            std::vector<Field> comps;
            for (std::size_t c = 0; c < m; ++c) comps.push_back(assemble(grid, c));
            char name[64];
            std::snprintf(name, sizeof(name), "t%.3f", cfg.snapshot_times[s]);
            save_wgrd(cfg.snapshot_prefix + name + ".wgrd", comps);
            if (cfg.csv_snapshots)
                detail::write_field_csv(cfg.snapshot_prefix + name + ".csv", comps[0]);
        }
    };
    maybe_snapshot(0.0);

    const std::size_t npatch = grid.patches.size();
    struct PatchStats {
        std::size_t dense = 0, comp = 0, nnz = 0, zeroed = 0;
    };
    std::vector<PatchStats> stats(npatch);
    std::vector<double> phase_dwt(npatch, 0.0), phase_thr(npatch, 0.0),
        phase_cod(npatch, 0.0);

    detail::PhaseTimer total_timer;
    double t = 0.0;
    std::size_t step = 0;
    while (t < cfg.sim.t_end - 1e-15) {
        double dt = cfl_dt(grid, cfg.sim);
        dt = std::min(dt, cfg.sim.t_end - t);

        sync_ghosts(grid);
        detail::PhaseTimer step_timer;
        detail::for_each_patch(npatch, cfg.threads, [&](std::size_t pi) {
            if (cfg.sim.scheme == Scheme::transport)
                fv_step(grid.patches[pi], scratch.patches[pi],
                        TransportFlux{cfg.sim.alpha, cfg.sim.beta}, dt, dx);
            else
                fv_step(grid.patches[pi], scratch.patches[pi],
                        SweFlux{cfg.sim.gravity}, dt, dx);
        });
        std::swap(grid.patches, scratch.patches);
        res.summary.step_seconds += step_timer.lap();
        t += dt;
        ++step;

        double mass_before = 0.0;
        if (cfg.strict) mass_before = global_mass(grid, 0);

        if (!cfg.no_compression) {
            detail::for_each_patch(npatch, cfg.threads, [&](std::size_t pi) {
                Patch& p = grid.patches[pi];
                detail::PhaseTimer pt;
                std::vector<std::vector<double>> comps(m);
                std::vector<Field> original;
                original.reserve(m);
                for (std::size_t c = 0; c < m; ++c)
                    original.push_back(extract_logical(p, c));
                std::vector<CoefficientSet> coeffs;
                coeffs.reserve(m);
                for (std::size_t c = 0; c < m; ++c)
                    coeffs.push_back(dwt_nd(original[c], plan));
                phase_dwt[pi] += pt.lap();
                std::size_t zeroed = 0;
                for (auto& cs : coeffs) zeroed += apply_threshold(cs, cfg.spec);
                phase_thr[pi] += pt.lap();
                for (std::size_t c = 0; c < m; ++c) comps[c] = std::move(coeffs[c].values);
                const CompressedPatch enc = encode_patch(
                    comps, plan.dims, static_cast<std::uint32_t>(cfg.levels),
                    cfg.codec, cfg.chunk_size);
                auto decoded = decode_patch(enc);
                phase_cod[pi] += pt.lap();
                std::size_t nnz = 0;
                for (const auto& c : decoded)
                    for (double v : c)
                        if (v != 0.0) ++nnz;
                if (zeroed == 0) {
                    // nothing was discarded and the codecs are lossless, so
                    // the cycle is the identity; skip the inverse transform
                    // to keep the state bit-identical to an uncompressed run
                    for (std::size_t c = 0; c < m; ++c)
                        insert_logical(p, c, original[c]);
                } else {
                    for (std::size_t c = 0; c < m; ++c) {
                        CoefficientSet cs{plan, std::move(decoded[c])};
                        insert_logical(p, c, idwt_nd(cs));
                    }
                }
                phase_dwt[pi] += pt.lap();
                stats[pi] = {enc.dense_bytes(), enc.compressed_bytes(), nnz, zeroed};
            });
        }

        MetricsRow row;
        row.step = step;
        row.time = t;
        if (!cfg.no_compression) {
            for (const auto& s : stats) {
                row.dense_bytes += s.dense;
                row.compressed_bytes += s.comp;
                row.nnz += s.nnz;
                row.zeroed += s.zeroed;
            }
            row.ratio = row.compressed_bytes > 0
                            ? static_cast<double>(row.dense_bytes) / row.compressed_bytes
                            : 1.0;
        }
        row.global_mass = global_mass(grid, 0);
        if (cfg.sim.scheme == Scheme::transport)
            row.l2 = l2_error(assemble(grid, 0), exact_transport(t, cfg.sim), cfg.sim);

        if (cfg.strict && !cfg.no_compression) {
            const double scale = std::max(std::abs(mass_before), 1.0);
            if (std::abs(row.global_mass - mass_before) > 1e-12 * scale)
                throw consistency_error("strict: compression cycle changed global mass");
            assemble(grid, 0);  // throws on shared-cell disagreement
        }

        if (metrics.is_open()) detail::write_metrics_row(metrics, row);
        if (cfg.observer) cfg.observer(grid, row);
        res.rows.push_back(row);
        maybe_snapshot(t);
    }

    res.summary.total_seconds = total_timer.lap();
    for (std::size_t pi = 0; pi < npatch; ++pi) {
        res.summary.dwt_seconds += phase_dwt[pi];
        res.summary.threshold_seconds += phase_thr[pi];
        res.summary.codec_seconds += phase_cod[pi];
    }
    if (!res.rows.empty()) {
        double sum = 0.0;
        for (const auto& r : res.rows) sum += r.ratio;
        res.summary.avg_ratio = sum / static_cast<double>(res.rows.size());
    }
    res.grid = std::move(grid);
    res.t_final = t;
    return res;
}

// ---------------------------------------------------------------------------
// File transform / restore (whole grid as a single patch)
// ---------------------------------------------------------------------------

inline void transform_file(const std::string& input, int levels,
                           const ThresholdSpec& spec, Codec codec,
                           std::size_t chunk_size, const std::string& output) {
    const auto comps = load_wgrd(input);
    WaveletPlan plan{comps[0].dims, levels};
    plan.validate();
    std::vector<std::vector<double>> arrays;
    for (const auto& f : comps) {
        CoefficientSet cs = dwt_nd(f, plan);
        apply_threshold(cs, spec);
        arrays.push_back(std::move(cs.values));
    }
    save_wgc(output, encode_patch(arrays, plan.dims,
                                  static_cast<std::uint32_t>(levels), codec,
                                  chunk_size));
}

inline void restore_file(const std::string& input, const std::string& output) {
    const CompressedPatch p = load_wgc(input);
    WaveletPlan plan{p.dims, static_cast<int>(p.levels)};
    plan.validate();
    auto arrays = decode_patch(p);
    std::vector<Field> comps;
    for (auto& a : arrays)
        comps.push_back(idwt_nd(CoefficientSet{plan, std::move(a)}));
    save_wgrd(output, comps);
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct SweepConfig {
    RunConfig base;
    std::vector<double> thresholds;
    std::vector<int> levels;
    std::vector<Codec> codecs;
    std::string out_dir;
};

struct SweepEntry {
    double threshold = 0.0;
    int level = 0;
    Codec codec = Codec::csr;
    double avg_ratio = 1.0;
    double final_l2 = 0.0;
    std::string metrics_file;
};

inline std::vector<SweepEntry> sweep(const SweepConfig& cfg) {
    namespace fs = std::filesystem;
    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
    std::vector<SweepEntry> table;
    for (Codec codec : cfg.codecs) {
        for (int level : cfg.levels) {
            for (double c : cfg.thresholds) {
                RunConfig rc = cfg.base;
                rc.codec = codec;
                rc.levels = level;
                rc.spec.c = c;
                char name[128];
                std::snprintf(name, sizeof(name), "run_%s_L%d_c%g.csv",
                              codec == Codec::csr ? "csr" : "lz", level, c);
                rc.metrics_path = cfg.out_dir.empty()
                                      ? std::string(name)
                                      : (fs::path(cfg.out_dir) / name).string();
                const RunResult r = run(rc);
                SweepEntry e;
                e.threshold = c;
                e.level = level;
                e.codec = codec;
                e.avg_ratio = r.summary.avg_ratio;
                e.final_l2 = r.rows.empty() ? 0.0 : r.rows.back().l2;
                e.metrics_file = rc.metrics_path;
                table.push_back(e);
            }
        }
    }
    if (!cfg.out_dir.empty()) {
        std::ofstream os((std::filesystem::path(cfg.out_dir) / "summary.csv").string());
        os << "codec,level,threshold,avg_ratio,final_l2_error,metrics_file\n";
        for (const auto& e : table) {
            char buf[256];
            std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%.17g,%.17g,",
                          e.codec == Codec::csr ? "csr" : "lz", e.level,
                          e.threshold, e.avg_ratio, e.final_l2);
            os << buf << e.metrics_file << '\n';
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Discontinuous-function demo
// ---------------------------------------------------------------------------

struct DemoReport {
    std::size_t total = 0;
    std::size_t nonzeros = 0;
    double coefficient_ratio = 0.0;  // total / nonzeros
    double mass_before = 0.0;
    double mass_after = 0.0;
};

/// Oscillating exponential with a parabolic discontinuity line, sampled on a
/// 129x129 grid; six transform steps, constant threshold 0.2 on the details.
inline DemoReport demo_discontinuous(const std::string& out_dir,
                                     double threshold = 0.2) {
    namespace fs = std::filesystem;
    if (!out_dir.empty()) fs::create_directories(out_dir);
    const std::size_t n = 129;
    Field f{{n, n}};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double x = static_cast<double>(i) / n;
            const double y = static_cast<double>(j) / n;
            const double stp = (y - x * x) >= 0.0 ? 1.0 : 2.0;
            f.values[i * n + j] =
                std::exp(x - y) * std::sin(2.0 * std::numbers::pi * (x + y)) * stp;
        }
    }
    DemoReport rep;
    rep.total = f.size();
    rep.mass_before = trapezoid_mass_nd(f);

    WaveletPlan plan{{n, n}, 6};
    CoefficientSet cs = dwt_nd(f, plan);
    apply_threshold(cs, ThresholdSpec{ThresholdMode::constant, threshold});
    for (double v : cs.values)
        if (v != 0.0) ++rep.nonzeros;
    rep.coefficient_ratio =
        rep.nonzeros ? static_cast<double>(rep.total) / rep.nonzeros : 0.0;

    const Field rec = idwt_nd(cs);
    rep.mass_after = trapezoid_mass_nd(rec);

    if (!out_dir.empty()) {
        save_wgrd((fs::path(out_dir) / "original.wgrd").string(), {&f, 1});
        save_wgrd((fs::path(out_dir) / "reconstructed.wgrd").string(), {&rec, 1});
        detail::write_field_csv((fs::path(out_dir) / "original.csv").string(), f);
        detail::write_field_csv((fs::path(out_dir) / "reconstructed.csv").string(), rec);
        std::ofstream os((fs::path(out_dir) / "report.txt").string());
        os << "total coefficients: " << rep.total << '\n'
           << "nonzero coefficients: " << rep.nonzeros << '\n'
           << "coefficient-count ratio: " << rep.coefficient_ratio << '\n'
           << "mass before: " << rep.mass_before << '\n'
           << "mass after: " << rep.mass_after << '\n';
    }
    return rep;
}

}  // namespace wavegrid
