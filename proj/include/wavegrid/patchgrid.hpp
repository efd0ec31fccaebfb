#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavegrid/codec.hpp"
#include "wavegrid/field.hpp"
#include "wavegrid/wavelet.hpp"

namespace wavegrid {

struct consistency_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One subgrid: logical extent 2^k+1 per dimension plus a one-cell ghost
/// ring (true extent = logical + 2). True index t maps to global index
/// origin + t - 1.
struct Patch {
    std::vector<std::size_t> logical;
    std::vector<std::size_t> true_dims;
    std::vector<std::size_t> origin;
    std::vector<Field> comps;  // each over true_dims

    double& at(std::size_t comp, std::span<const std::size_t> true_idx,
               std::span<const std::size_t> strides) {
        return comps[comp].values[flat_index(true_idx, strides)];
    }
};

struct PatchGrid {
    std::vector<std::size_t> global_dims;  // logical points per dimension
    std::vector<std::size_t> splits;
    std::size_t components = 1;
    bool periodic = true;
    std::vector<Patch> patches;  // row-major over split coordinates

    std::size_t rank() const { return global_dims.size(); }
    std::size_t patch_logical(std::size_t d) const {
        return (global_dims[d] - 1) / splits[d] + 1;
    }

    std::size_t patch_flat(std::span<const std::size_t> coord) const {
        std::size_t f = 0;
        for (std::size_t d = 0; d < splits.size(); ++d) f = f * splits[d] + coord[d];
        return f;
    }
};

/// Split a global grid of logical points into subgrids of logical length
/// 2^k+1 sharing one boundary layer with each neighbor.
inline PatchGrid decompose(std::vector<std::size_t> global_dims,
                           std::vector<std::size_t> splits,
                           std::size_t components, bool periodic = true) {
    if (global_dims.size() != splits.size() || global_dims.empty())
        throw std::invalid_argument("decompose: dims/splits rank mismatch");
    PatchGrid g;
    g.global_dims = std::move(global_dims);
    g.splits = std::move(splits);
    g.components = components;
    g.periodic = periodic;

    std::vector<std::size_t> local(g.rank());
    for (std::size_t d = 0; d < g.rank(); ++d) {
        const std::size_t G = g.global_dims[d];
        const std::size_t P = g.splits[d];
        if (P == 0 || G < 2 || (G - 1) % P != 0)
            throw std::invalid_argument("decompose: dimension not divisible by splits");
        const std::size_t n = (G - 1) / P + 1;
        if (!valid_signal_length(n))
            throw std::invalid_argument("decompose: patch logical length is not 2^k+1");
        local[d] = n;
    }

    std::size_t npatch = 1;
    for (auto p : g.splits) npatch *= p;
    g.patches.resize(npatch);
    std::vector<std::size_t> coord(g.rank(), 0);
    for (std::size_t i = 0; i < npatch; ++i) {
        Patch& p = g.patches[i];
        p.logical = local;
        p.true_dims.resize(g.rank());
        p.origin.resize(g.rank());
        for (std::size_t d = 0; d < g.rank(); ++d) {
            p.true_dims[d] = local[d] + 2;
            p.origin[d] = coord[d] * (local[d] - 1);
        }
        p.comps.assign(components, Field(p.true_dims));
        // increment coord (row-major)
        for (std::size_t d = g.rank(); d-- > 0;) {
            if (++coord[d] < g.splits[d]) break;
            coord[d] = 0;
        }
    }
    return g;
}

/// Initialize component `comp` from a function of the global point index.
inline void fill(PatchGrid& g, std::size_t comp,
                 const std::function<double(std::span<const std::size_t>)>& f) {
    std::vector<std::size_t> gidx(g.rank());
    for (auto& p : g.patches) {
        const auto strides = strides_of(p.true_dims);
        std::vector<std::size_t> idx(g.rank(), 1);
        bool more = true;
        while (more) {
            for (std::size_t d = 0; d < g.rank(); ++d) gidx[d] = p.origin[d] + idx[d] - 1;
            p.comps[comp].values[flat_index(idx, strides)] = f(gidx);
            more = false;
            for (std::size_t d = g.rank(); d-- > 0;) {
                if (++idx[d] <= p.logical[d]) {
                    more = true;
                    break;
                }
                idx[d] = 1;
            }
        }
    }
}

/// Refresh every ghost cell from the owning neighbor, one dimension at a
/// time so that corner ghosts end up consistent. Shared boundary cells are
/// not copied. Non-periodic grids get zero-gradient edge ghosts.
inline void sync_ghosts(PatchGrid& g) {
    std::vector<std::size_t> coord(g.rank(), 0);
    for (std::size_t d = 0; d < g.rank(); ++d) {
        std::fill(coord.begin(), coord.end(), 0);
        for (std::size_t pi = 0; pi < g.patches.size(); ++pi) {
            Patch& p = g.patches[pi];
            const auto strides = strides_of(p.true_dims);
            const std::size_t n = p.logical[d];

            for (int side = 0; side < 2; ++side) {
                const bool low = side == 0;
                // neighbor patch coordinate along d
                std::vector<std::size_t> ncoord = coord;
                bool has_neighbor = true;
                if (low) {
                    if (coord[d] > 0) ncoord[d] = coord[d] - 1;
                    else if (g.periodic) ncoord[d] = g.splits[d] - 1;
                    else has_neighbor = false;
                } else {
                    if (coord[d] + 1 < g.splits[d]) ncoord[d] = coord[d] + 1;
                    else if (g.periodic) ncoord[d] = 0;
                    else has_neighbor = false;
                }
                Patch* np = has_neighbor ? &g.patches[g.patch_flat(ncoord)] : nullptr;
                const auto nstrides = has_neighbor ? strides_of(np->true_dims)
                                                   : std::vector<std::size_t>{};
                // ghost true index and source true index along d:
                // low ghost (t=0) <- neighbor t = n-1; high ghost (t=n+1) <- t = 2.
                const std::size_t tdst = low ? 0 : n + 1;
                const std::size_t tsrc = has_neighbor ? (low ? n - 1 : 2)
                                                      : (low ? 1 : n);

                // Cross-dimension range: dims already synced (< d) include
                // their ghosts; later dims stay within the logical block.
                std::vector<std::size_t> idx(g.rank());
                std::vector<std::size_t> lo(g.rank()), hi(g.rank());
                for (std::size_t e = 0; e < g.rank(); ++e) {
                    lo[e] = e < d ? 0 : 1;
                    hi[e] = e < d ? p.true_dims[e] - 1 : p.logical[e];
                }
                idx = lo;
                idx[d] = tdst;
                bool more = true;
                while (more) {
                    std::vector<std::size_t> sidx = idx;
                    sidx[d] = tsrc;
                    for (std::size_t c = 0; c < g.components; ++c) {
                        const double v = has_neighbor
                            ? np->comps[c].values[flat_index(sidx, nstrides)]
                            : p.comps[c].values[flat_index(sidx, strides)];
                        p.comps[c].values[flat_index(idx, strides)] = v;
                    }
                    more = false;
                    for (std::size_t e = g.rank(); e-- > 0;) {
                        if (e == d) continue;
                        if (++idx[e] <= hi[e]) {
                            more = true;
                            break;
                        }
                        idx[e] = lo[e];
                    }
                }
            }
            // advance patch coordinate
            for (std::size_t e = g.rank(); e-- > 0;) {
                if (++coord[e] < g.splits[e]) break;
                coord[e] = 0;
            }
        }
    }
}

/// Read the assembled global logical field for one component, checking that
/// every shared boundary cell agrees between its owners.
inline Field assemble(const PatchGrid& g, std::size_t comp,
                      double tol = 1e-12) {
    Field out{g.global_dims};
    std::vector<char> seen(out.size(), 0);
    const auto gstrides = strides_of(g.global_dims);
    std::vector<std::size_t> gidx(g.rank());
    for (const auto& p : g.patches) {
        const auto strides = strides_of(p.true_dims);
        std::vector<std::size_t> idx(g.rank(), 1);
        bool more = true;
        while (more) {
            for (std::size_t d = 0; d < g.rank(); ++d) gidx[d] = p.origin[d] + idx[d] - 1;
            const std::size_t gf = flat_index(gidx, gstrides);
            const double v = p.comps[comp].values[flat_index(idx, strides)];
            if (seen[gf]) {
                const double ref = out.values[gf];
                const double scale = std::max({std::abs(ref), std::abs(v), 1.0});
                if (std::abs(ref - v) > tol * scale)
                    throw consistency_error("assemble: shared cells disagree");
            } else {
                out.values[gf] = v;
                seen[gf] = 1;
            }
            more = false;
            for (std::size_t d = g.rank(); d-- > 0;) {
                if (++idx[d] <= p.logical[d]) {
                    more = true;
                    break;
                }
                idx[d] = 1;
            }
        }
    }
    return out;
}

/// Sum of per-patch tensor-trapezoid masses over the logical blocks. The
/// half weights at patch boundaries make every shared cell contribute its
/// global trapezoid weight.
inline double global_mass(const PatchGrid& g, std::size_t comp) {
    double total = 0.0;
    for (const auto& p : g.patches) {
        const auto strides = strides_of(p.true_dims);
        std::vector<std::size_t> idx(g.rank(), 1);
        bool more = true;
        while (more) {
            double w = 1.0;
            for (std::size_t d = 0; d < g.rank(); ++d)
                if (idx[d] == 1 || idx[d] == p.logical[d]) w *= 0.5;
            total += w * p.comps[comp].values[flat_index(idx, strides)];
            more = false;
            for (std::size_t d = g.rank(); d-- > 0;) {
                if (++idx[d] <= p.logical[d]) {
                    more = true;
                    break;
                }
                idx[d] = 1;
            }
        }
    }
    return total;
}

/// Copy the logical block of one component into a Field over logical dims.
inline Field extract_logical(const Patch& p, std::size_t comp) {
    Field out{p.logical};
    const auto strides = strides_of(p.true_dims);
    const auto ostrides = strides_of(p.logical);
    std::vector<std::size_t> idx(p.logical.size(), 1), oidx(p.logical.size(), 0);
    bool more = true;
    while (more) {
        out.values[flat_index(oidx, ostrides)] =
            p.comps[comp].values[flat_index(idx, strides)];
        more = false;
        for (std::size_t d = p.logical.size(); d-- > 0;) {
            if (++oidx[d] < p.logical[d]) {
                ++idx[d];
                more = true;
                break;
            }
            oidx[d] = 0;
            idx[d] = 1;
        }
    }
    return out;
}

inline void insert_logical(Patch& p, std::size_t comp, const Field& f) {
    if (f.dims != p.logical)
        throw std::invalid_argument("insert_logical: dims mismatch");
    const auto strides = strides_of(p.true_dims);
    const auto istrides = strides_of(p.logical);
    std::vector<std::size_t> idx(p.logical.size(), 1), iidx(p.logical.size(), 0);
    bool more = true;
    while (more) {
        p.comps[comp].values[flat_index(idx, strides)] =
            f.values[flat_index(iidx, istrides)];
        more = false;
        for (std::size_t d = p.logical.size(); d-- > 0;) {
            if (++iidx[d] < p.logical[d]) {
                ++idx[d];
                more = true;
                break;
            }
            iidx[d] = 0;
            idx[d] = 1;
        }
    }
}

// --- WGRD snapshot file: assembled logical grid, no ghosts -------------------

inline void save_wgrd(std::ostream& os, std::span<const Field> comps) {
    if (comps.empty()) throw std::invalid_argument("save_wgrd: no components");
    os.write("WGRD", 4);
    const std::uint32_t version = 1;
    os.write(reinterpret_cast<const char*>(&version), 4);
    const std::uint32_t ndims = static_cast<std::uint32_t>(comps[0].dims.size());
    os.write(reinterpret_cast<const char*>(&ndims), 4);
    for (auto d : comps[0].dims) {
        const std::uint32_t v = static_cast<std::uint32_t>(d);
        os.write(reinterpret_cast<const char*>(&v), 4);
    }
    const std::uint32_t nc = static_cast<std::uint32_t>(comps.size());
    os.write(reinterpret_cast<const char*>(&nc), 4);
    for (const auto& f : comps) {
        if (f.dims != comps[0].dims)
            throw std::invalid_argument("save_wgrd: component dims differ");
        os.write(reinterpret_cast<const char*>(f.values.data()),
                 static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    }
}

inline std::vector<Field> load_wgrd(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "WGRD", 4) != 0)
        throw corrupt_stream_error("not a WGRD file");
    auto get_u32 = [&is] {
        std::uint32_t v;
        is.read(reinterpret_cast<char*>(&v), 4);
        if (!is) throw corrupt_stream_error("truncated WGRD file");
        return v;
    };
    const std::uint32_t version = get_u32();
    if (version != 1) throw corrupt_stream_error("unsupported WGRD version");
    const std::uint32_t ndims = get_u32();
    std::vector<std::size_t> dims(ndims);
    for (auto& d : dims) d = get_u32();
    const std::uint32_t nc = get_u32();
    std::vector<Field> comps;
    for (std::uint32_t c = 0; c < nc; ++c) {
        Field f{dims};
        is.read(reinterpret_cast<char*>(f.values.data()),
                static_cast<std::streamsize>(f.values.size() * sizeof(double)));
        if (!is) throw corrupt_stream_error("truncated WGRD file");
        comps.push_back(std::move(f));
    }
    return comps;
}

inline void save_wgrd(const std::string& path, std::span<const Field> comps) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    save_wgrd(os, comps);
}

inline std::vector<Field> load_wgrd(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return load_wgrd(is);
}

}  // namespace wavegrid
