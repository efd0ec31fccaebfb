#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace wavegrid {

/// Dense N-dimensional array of doubles, row-major (last dimension fastest).
struct Field {
    std::vector<std::size_t> dims;
    std::vector<double> values;

    Field() = default;
    explicit Field(std::vector<std::size_t> d)
        : dims(std::move(d)), values(count(dims), 0.0) {}
    Field(std::vector<std::size_t> d, std::vector<double> v)
        : dims(std::move(d)), values(std::move(v)) {
        if (values.size() != count(dims))
            throw std::invalid_argument("Field: value count does not match dims");
    }

    static std::size_t count(std::span<const std::size_t> d) {
        std::size_t n = 1;
        for (auto x : d) n *= x;
        return n;
    }

    std::size_t rank() const { return dims.size(); }
    std::size_t size() const { return values.size(); }

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Row-major strides (stride of the last dimension is 1).
inline std::vector<std::size_t> strides_of(std::span<const std::size_t> dims) {
    std::vector<std::size_t> s(dims.size(), 1);
    for (std::size_t d = dims.size(); d-- > 1;)
        s[d - 1] = s[d] * dims[d];
    return s;
}

inline std::size_t flat_index(std::span<const std::size_t> idx,
                              std::span<const std::size_t> strides) {
    std::size_t f = 0;
    for (std::size_t d = 0; d < idx.size(); ++d) f += idx[d] * strides[d];
    return f;
}

/// Advance a multi-index over `dims`, skipping dimension `skip` (its entry is
/// left untouched). Returns false when iteration is exhausted.
inline bool next_index(std::vector<std::size_t>& idx,
                       std::span<const std::size_t> dims, std::size_t skip) {
    for (std::size_t d = dims.size(); d-- > 0;) {
        if (d == skip) continue;
        if (++idx[d] < dims[d]) return true;
        idx[d] = 0;
    }
    return false;
}

}  // namespace wavegrid
