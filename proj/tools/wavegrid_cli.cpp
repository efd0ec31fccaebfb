#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "wavegrid/pipeline.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

std::vector<std::size_t> parse_splits(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, 'x')) out.push_back(std::stoul(part));
    if (out.empty()) throw std::invalid_argument("empty splits spec");
    return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& s, Parse parse) {
    std::vector<T> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (!part.empty()) out.push_back(parse(part));
    }
    return out;
}

wavegrid::SweepConfig parse_sweep_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file: " + path);
    wavegrid::SweepConfig cfg;
    cfg.base.sim.scheme = wavegrid::Scheme::transport;
    cfg.thresholds = {0.0};
    cfg.levels = {4};
    cfg.codecs = {wavegrid::Codec::csr};
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "scheme")
            cfg.base.sim.scheme = val == "swe" ? wavegrid::Scheme::swe
                                               : wavegrid::Scheme::transport;
        else if (key == "nx") cfg.base.sim.nx = std::stoul(val);
        else if (key == "splits") cfg.base.sim.splits = parse_splits(val);
        else if (key == "cfl") cfg.base.sim.cfl = std::stod(val);
        else if (key == "t_end") cfg.base.sim.t_end = std::stod(val);
        else if (key == "alpha") cfg.base.sim.alpha = std::stod(val);
        else if (key == "beta") cfg.base.sim.beta = std::stod(val);
        else if (key == "mode") cfg.base.spec.mode = wavegrid::parse_threshold_mode(val);
        else if (key == "chunk_size") cfg.base.chunk_size = std::stoul(val);
        else if (key == "threads") cfg.base.threads = static_cast<unsigned>(std::stoul(val));
        else if (key == "thresholds")
            cfg.thresholds = parse_list<double>(val, [](const std::string& s) { return std::stod(s); });
        else if (key == "levels")
            cfg.levels = parse_list<int>(val, [](const std::string& s) { return std::stoi(s); });
        else if (key == "codecs")
            cfg.codecs = parse_list<wavegrid::Codec>(val, wavegrid::parse_codec);
        else
            throw std::invalid_argument("unknown config key: " + key);
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mass-conserving wavelet compression for finite-volume grids"};
    app.require_subcommand(1);

    // transform
    auto* transform = app.add_subcommand("transform", "compress a WGRD grid file");
    std::string in_path, out_path, mode_str = "capped", codec_str = "csr";
    int levels = 4;
    double threshold = 0.0;
    std::size_t chunk_size = 64 * 1024;
    transform->add_option("--input", in_path)->required();
    transform->add_option("--levels", levels)->required();
    transform->add_option("--mode", mode_str);
    transform->add_option("--threshold", threshold);
    transform->add_option("--codec", codec_str);
    transform->add_option("--chunk-size", chunk_size);
    transform->add_option("--output", out_path)->required();

    // restore
    auto* restore = app.add_subcommand("restore", "decompress a WGC file back to WGRD");
    restore->add_option("--input", in_path)->required();
    restore->add_option("--output", out_path)->required();

    // simulate
    auto* simulate = app.add_subcommand(
        "simulate", "run a simulation with per-step compress/decompress cycles");
    std::string scheme_str, splits_str = "2x2", metrics_path, snapshot_at,
                snapshot_prefix = "snapshot_";
    wavegrid::RunConfig rc;
    bool csv_snapshots = false;
    simulate->add_option("scheme", scheme_str, "transport or swe")->required();
    simulate->add_option("--nx", rc.sim.nx);
    simulate->add_option("--splits", splits_str);
    simulate->add_option("--cfl", rc.sim.cfl);
    simulate->add_option("--t-end", rc.sim.t_end);
    simulate->add_option("--alpha", rc.sim.alpha);
    simulate->add_option("--beta", rc.sim.beta);
    simulate->add_option("--domain-length", rc.sim.domain_length);
    simulate->add_option("--levels", rc.levels);
    simulate->add_option("--mode", mode_str);
    simulate->add_option("--threshold", rc.spec.c);
    simulate->add_option("--codec", codec_str);
    simulate->add_option("--chunk-size", rc.chunk_size);
    simulate->add_option("--metrics", metrics_path);
    simulate->add_option("--snapshot-at", snapshot_at, "comma-separated times");
    simulate->add_option("--snapshot-prefix", snapshot_prefix);
    simulate->add_flag("--csv-snapshots", csv_snapshots);
    simulate->add_flag("--no-compression", rc.no_compression);
    simulate->add_flag("--strict", rc.strict);
    simulate->add_option("--threads", rc.threads);

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "cartesian-product parameter sweep");
    std::string config_path, out_dir;
    sweep_cmd->add_option("--config", config_path)->required();
    sweep_cmd->add_option("--out-dir", out_dir)->required();

    // demo
    auto* demo = app.add_subcommand("demo", "built-in demonstrations");
    auto* demo_disc = demo->add_subcommand(
        "discontinuous", "transform of a discontinuous 129x129 function");
    demo_disc->add_option("--out-dir", out_dir)->required();
    demo->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc_parse = app.exit(e);
        return rc_parse == 0 ? exit_ok : exit_config;
    }

    try {
        if (*transform) {
            wavegrid::ThresholdSpec spec{wavegrid::parse_threshold_mode(mode_str),
                                         threshold};
            wavegrid::transform_file(in_path, levels, spec,
                                     wavegrid::parse_codec(codec_str), chunk_size,
                                     out_path);
        } else if (*restore) {
            wavegrid::restore_file(in_path, out_path);
        } else if (*simulate) {
            if (scheme_str == "transport") rc.sim.scheme = wavegrid::Scheme::transport;
            else if (scheme_str == "swe") rc.sim.scheme = wavegrid::Scheme::swe;
            else throw std::invalid_argument("scheme must be transport or swe");
            rc.sim.splits = parse_splits(splits_str);
            rc.spec.mode = wavegrid::parse_threshold_mode(mode_str);
            rc.codec = wavegrid::parse_codec(codec_str);
            rc.metrics_path = metrics_path;
            rc.snapshot_prefix = snapshot_prefix;
            rc.csv_snapshots = csv_snapshots;
            if (!snapshot_at.empty())
                rc.snapshot_times = parse_list<double>(
                    snapshot_at, [](const std::string& s) { return std::stod(s); });
            const auto res = wavegrid::run(rc);
            std::printf("steps: %zu  t_final: %g\n", res.rows.size(), res.t_final);
            std::printf("average compression ratio: %.4f\n", res.summary.avg_ratio);
            std::printf("phase seconds  step: %.3f  dwt: %.3f  threshold: %.3f  codec: %.3f  total: %.3f\n",
                        res.summary.step_seconds, res.summary.dwt_seconds,
                        res.summary.threshold_seconds, res.summary.codec_seconds,
                        res.summary.total_seconds);
            std::printf("overhead vs pure stepping: %+.2f%%\n", 100.0 * res.summary.overhead());
        } else if (*sweep_cmd) {
            auto cfg = parse_sweep_config(config_path);
            cfg.out_dir = out_dir;
            const auto table = wavegrid::sweep(cfg);
            for (const auto& e : table)
                std::printf("%s L=%d c=%g  avg_ratio=%.4f  final_l2=%.6g\n",
                            e.codec == wavegrid::Codec::csr ? "csr" : "lz", e.level,
                            e.threshold, e.avg_ratio, e.final_l2);
        } else if (*demo_disc) {
            const auto rep = wavegrid::demo_discontinuous(out_dir);
            std::printf("nonzero coefficients: %zu of %zu\n", rep.nonzeros, rep.total);
            std::printf("coefficient-count ratio: %.4f\n", rep.coefficient_ratio);
            std::printf("mass before: %.17g  after: %.17g\n", rep.mass_before,
                        rep.mass_after);
        }
    } catch (const wavegrid::riemann_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const wavegrid::consistency_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_ok;
}
