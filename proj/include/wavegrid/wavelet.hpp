#pragma once

#include <bit>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wavegrid/field.hpp"

namespace wavegrid {

/// Valid signal lengths are 2^j + 1 (length 2 is j=0 and admits no step).
inline bool valid_signal_length(std::size_t n) {
    return n >= 2 && std::has_single_bit(n - 1);
}

inline int signal_level(std::size_t n) {
    if (!valid_signal_length(n))
        throw std::invalid_argument("signal length must be 2^j + 1");
    return std::countr_zero(n - 1);
}

namespace detail {

// Update weight for detail index k among `half` details: 1/2 at the two
// boundary details, 1/4 inside. This is the unique choice preserving the
// trapezoid mass across one step.
inline double lift_weight(std::size_t k, std::size_t half) {
    return (k == 0 || k == half - 1) ? 0.5 : 0.25;
}

// Shared rounding paths so forward and inverse are bit-exact inverses.
inline double predict(double even_l, double even_r) {
    return (even_l + even_r) / 2.0;
}

inline double update(std::span<const double> d, std::size_t k, std::size_t half) {
    return lift_weight(k - 1, half) * d[k - 1] + lift_weight(k, half) * d[k];
}

}  // namespace detail

/// One lifting step: signal of length 2^j+1 -> coarse of length 2^{j-1}+1
/// plus 2^{j-1} details. Endpoints are copied unchanged.
inline void dwt_step_1d(std::span<const double> s, std::span<double> coarse,
                        std::span<double> details) {
    const std::size_t n = s.size();
    if (!valid_signal_length(n) || n < 3)
        throw std::invalid_argument("dwt_step_1d: length must be 2^j + 1, j >= 1");
    const std::size_t half = (n - 1) / 2;
    if (coarse.size() != half + 1 || details.size() != half)
        throw std::invalid_argument("dwt_step_1d: output size mismatch");

    for (std::size_t k = 0; k < half; ++k)
        details[k] = s[2 * k + 1] - detail::predict(s[2 * k], s[2 * k + 2]);
    coarse[0] = s[0];
    coarse[half] = s[n - 1];
    for (std::size_t k = 1; k < half; ++k)
        coarse[k] = s[2 * k] + detail::update(details, k, half);
}

inline std::pair<std::vector<double>, std::vector<double>>
dwt_step_1d(std::span<const double> s) {
    const std::size_t half = (s.size() - 1) / 2;
    std::vector<double> coarse(half + 1), details(half);
    dwt_step_1d(s, coarse, details);
    return {std::move(coarse), std::move(details)};
}

/// Exact inverse of dwt_step_1d (bit-for-bit when details are untouched).
inline void idwt_step_1d(std::span<const double> coarse,
                         std::span<const double> details, std::span<double> s) {
    const std::size_t half = details.size();
    if (coarse.size() != half + 1)
        throw std::invalid_argument("idwt_step_1d: len(coarse) must be len(details)+1");
    if (!valid_signal_length(coarse.size()))
        throw std::invalid_argument("idwt_step_1d: invalid coarse length");
    if (s.size() != 2 * half + 1)
        throw std::invalid_argument("idwt_step_1d: output size mismatch");

    s[0] = coarse[0];
    s[2 * half] = coarse[half];
    for (std::size_t k = 1; k < half; ++k)
        s[2 * k] = coarse[k] - detail::update(details, k, half);
    for (std::size_t k = 0; k < half; ++k)
        s[2 * k + 1] = details[k] + detail::predict(s[2 * k], s[2 * k + 2]);
}

inline std::vector<double> idwt_step_1d(std::span<const double> coarse,
                                        std::span<const double> details) {
    std::vector<double> s(coarse.size() + details.size());
    idwt_step_1d(coarse, details, s);
    return s;
}

/// Multi-level in-place transform of one line: after `levels` steps the
/// layout is [coarsest samples | details coarse..fine], each detail band
/// occupying ((n-1)>>l, (n-1)>>(l-1)].
inline void dwt_line(std::span<double> line, int levels) {
    std::size_t b = line.size();
    std::vector<double> coarse, details;
    for (int l = 0; l < levels; ++l) {
        if (b < 3)
            throw std::invalid_argument("dwt_line: too many levels for line length");
        const std::size_t half = (b - 1) / 2;
        coarse.resize(half + 1);
        details.resize(half);
        dwt_step_1d(line.first(b), coarse, details);
        std::copy(coarse.begin(), coarse.end(), line.begin());
        std::copy(details.begin(), details.end(), line.begin() + half + 1);
        b = half + 1;
    }
}

inline void idwt_line(std::span<double> line, int levels) {
    const std::size_t n = line.size();
    if (levels > 0 && (!valid_signal_length(n) || (n - 1) >> levels == 0))
        throw std::invalid_argument("idwt_line: too many levels for line length");
    std::vector<double> s;
    for (int l = levels; l >= 1; --l) {
        const std::size_t bl = ((n - 1) >> l) + 1;      // coarse block
        const std::size_t bl1 = ((n - 1) >> (l - 1)) + 1;  // expanded block
        s.resize(bl1);
        idwt_step_1d(line.first(bl), line.subspan(bl, bl1 - bl), s);
        std::copy(s.begin(), s.end(), line.begin());
    }
}

/// Per-dimension lengths (each 2^k+1) and the number of transform steps L.
struct WaveletPlan {
    std::vector<std::size_t> dims;
    int levels = 0;

    void validate() const {
        if (levels < 0) throw std::invalid_argument("WaveletPlan: negative level count");
        for (auto n : dims) {
            const int k = signal_level(n);
            if (levels > k)
                throw std::invalid_argument("WaveletPlan: levels exceed dimension depth");
        }
    }
};

/// Per-dimension classification of a coefficient position.
struct BandInfo {
    bool is_detail = false;
    int scale = 0;  // normalized: coarsest detail band = 0, finer bands +1
};

/// A transformed Field: sample block at the low-index corner, detail bands
/// coarse-to-fine along every dimension.
struct CoefficientSet {
    WaveletPlan plan;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }

    /// Classify position `pos` along dimension `dim`.
    BandInfo band(std::size_t dim, std::size_t pos) const {
        const std::size_t m = plan.dims[dim] - 1;
        if (pos > m) throw std::out_of_range("CoefficientSet::band: position");
        if (plan.levels == 0 || pos <= (m >> plan.levels)) return {false, 0};
        // detail written at step l occupies (m>>l, m>>(l-1)]
        for (int l = plan.levels; l >= 1; --l)
            if (pos <= (m >> (l - 1))) return {true, plan.levels - l};
        throw std::logic_error("CoefficientSet::band: corrupt band map");
    }
};

/// Separable N-D transform: the full L-level 1-D transform is applied to
/// every line of dimension 0, then dimension 1, and so on.
inline CoefficientSet dwt_nd(const Field& field, const WaveletPlan& plan) {
    plan.validate();
    if (field.dims != plan.dims)
        throw std::invalid_argument("dwt_nd: field dims do not match plan");
    CoefficientSet out{plan, field.values};
    if (plan.levels == 0) return out;

    const auto strides = strides_of(plan.dims);
    std::vector<double> line;
    for (std::size_t d = 0; d < plan.dims.size(); ++d) {
        const std::size_t n = plan.dims[d];
        line.resize(n);
        std::vector<std::size_t> idx(plan.dims.size(), 0);
        do {
            const std::size_t base = flat_index(idx, strides);
            for (std::size_t i = 0; i < n; ++i)
                line[i] = out.values[base + i * strides[d]];
            dwt_line(line, plan.levels);
            for (std::size_t i = 0; i < n; ++i)
                out.values[base + i * strides[d]] = line[i];
        } while (next_index(idx, plan.dims, d));
    }
    return out;
}

inline Field idwt_nd(const CoefficientSet& coeffs) {
    coeffs.plan.validate();
    if (coeffs.values.size() != Field::count(coeffs.plan.dims))
        throw std::invalid_argument("idwt_nd: value count does not match plan");
    Field out{coeffs.plan.dims, coeffs.values};
    if (coeffs.plan.levels == 0) return out;

    const auto strides = strides_of(out.dims);
    std::vector<double> line;
    for (std::size_t d = out.dims.size(); d-- > 0;) {
        const std::size_t n = out.dims[d];
        line.resize(n);
        std::vector<std::size_t> idx(out.dims.size(), 0);
        do {
            const std::size_t base = flat_index(idx, strides);
            for (std::size_t i = 0; i < n; ++i)
                line[i] = out.values[base + i * strides[d]];
            idwt_line(line, coeffs.plan.levels);
            for (std::size_t i = 0; i < n; ++i)
                out.values[base + i * strides[d]] = line[i];
        } while (next_index(idx, out.dims, d));
    }
    return out;
}

/// Dense one-step transform matrix A with v = Au, v in interleaved
/// (s0, d0, s1, d1, ..., s_half) order. Row-major, size (2^j+1)^2.
inline std::vector<double> analysis_matrix(int j) {
    if (j < 1 || j > 10)
        throw std::invalid_argument("analysis_matrix: j must be in [1, 10]");
    const std::size_t n = (std::size_t{1} << j) + 1;
    const std::size_t half = (n - 1) / 2;
    std::vector<double> a(n * n, 0.0);
    std::vector<double> e(n, 0.0), coarse(half + 1), details(half);
    for (std::size_t r = 0; r < n; ++r) {
        e.assign(n, 0.0);
        e[r] = 1.0;
        dwt_step_1d(e, coarse, details);
        for (std::size_t k = 0; k <= half; ++k) a[(2 * k) * n + r] = coarse[k];
        for (std::size_t k = 0; k < half; ++k) a[(2 * k + 1) * n + r] = details[k];
    }
    return a;
}

inline void write_matrix_csv(std::ostream& os, std::span<const double> m,
                             std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k)
            os << m[i * n + k] << (k + 1 < n ? ',' : '\n');
    }
}

/// Trapezoid quadrature: half weights at the two endpoints.
inline double trapezoid_mass(std::span<const double> s) {
    if (s.size() < 2) throw std::invalid_argument("trapezoid_mass: need >= 2 samples");
    double sum = (s.front() + s.back()) / 2.0;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) sum += s[i];
    return sum;
}

/// Tensor-product trapezoid mass: weight 1/2 at every boundary face.
inline double trapezoid_mass_nd(const Field& f) {
    const auto strides = strides_of(f.dims);
    double sum = 0.0;
    std::vector<std::size_t> idx(f.dims.size(), 0);
    const std::size_t total = f.size();
    for (std::size_t flat = 0; flat < total; ++flat) {
        double w = 1.0;
        std::size_t rem = flat;
        for (std::size_t d = 0; d < f.dims.size(); ++d) {
            const std::size_t p = rem / strides[d];
            rem %= strides[d];
            if (p == 0 || p == f.dims[d] - 1) w *= 0.5;
        }
        sum += w * f.values[flat];
    }
    return sum;
}

}  // namespace wavegrid
