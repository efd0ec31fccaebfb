#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavegrid/wavelet.hpp"

namespace wavegrid {

enum class ThresholdMode { constant, accumulation, capped };

inline ThresholdMode parse_threshold_mode(const std::string& s) {
    if (s == "constant") return ThresholdMode::constant;
    if (s == "accumulation") return ThresholdMode::accumulation;
    if (s == "capped") return ThresholdMode::capped;
    throw std::invalid_argument("unknown threshold mode: " + s);
}

struct ThresholdSpec {
    ThresholdMode mode = ThresholdMode::capped;
    double c = 0.0;
    double alpha = 2.0;
};

/// Threshold for a detail band given its per-dimension normalized scales
/// (coarsest detail band = 0; sample dimensions contribute 0).
inline double band_threshold(std::span<const int> scales, const ThresholdSpec& spec) {
    switch (spec.mode) {
        case ThresholdMode::constant:
            return spec.c;
        case ThresholdMode::accumulation: {
            int sum = 0;
            for (int j : scales) sum += j;
            return spec.c * std::pow(spec.alpha, sum);
        }
        case ThresholdMode::capped: {
            int mx = 0;
            for (int j : scales) mx = std::max(mx, j);
            return spec.c * std::pow(spec.alpha, mx);
        }
    }
    throw std::invalid_argument("band_threshold: unknown mode");
}

/// Zero every detail coefficient with |value| strictly below its band
/// threshold. Samples are never touched. Returns the number zeroed.
inline std::size_t apply_threshold(CoefficientSet& coeffs, const ThresholdSpec& spec) {
    if (spec.c < 0.0) throw std::invalid_argument("apply_threshold: c must be >= 0");
    if (spec.c == 0.0 || coeffs.plan.levels == 0) return 0;

    const auto& dims = coeffs.plan.dims;
    const auto strides = strides_of(dims);
    const std::size_t rank = dims.size();

    // Per-dimension band tables, indexed by position.
    std::vector<std::vector<BandInfo>> bands(rank);
    for (std::size_t d = 0; d < rank; ++d) {
        bands[d].resize(dims[d]);
        for (std::size_t p = 0; p < dims[d]; ++p) bands[d][p] = coeffs.band(d, p);
    }

    std::size_t zeroed = 0;
    std::vector<int> scales(rank);
    const std::size_t total = coeffs.values.size();
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        bool any_detail = false;
        for (std::size_t d = 0; d < rank; ++d) {
            const BandInfo b = bands[d][rem / strides[d]];
            rem %= strides[d];
            any_detail |= b.is_detail;
            scales[d] = b.is_detail ? b.scale : 0;
        }
        if (!any_detail) continue;
        double& v = coeffs.values[flat];
        if (v != 0.0 && std::abs(v) < band_threshold(scales, spec)) {
            v = 0.0;
            ++zeroed;
        }
    }
    return zeroed;
}

}  // namespace wavegrid
