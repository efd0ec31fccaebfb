#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavegrid/patchgrid.hpp"

namespace wavegrid {

struct riemann_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The four 2-D unit directions (+x, -x, +y, -y).
inline constexpr std::array<std::array<int, 2>, 4> directions{{
    {{1, 0}}, {{-1, 0}}, {{0, 1}}, {{0, -1}}}};

enum class Scheme { transport, swe };

struct SimConfig {
    Scheme scheme = Scheme::transport;
    std::size_t nx = 129;           // global logical points per dimension
    std::vector<std::size_t> splits{2, 2};
    double cfl = 0.45;
    double t_end = 0.5;
    double alpha = 0.9;             // transport x speed
    double beta = 0.9;              // transport y speed
    double gravity = 9.81;
    double domain_length = 1.0;

    double dx() const { return domain_length / static_cast<double>(nx - 1); }
    std::size_t component_count() const { return scheme == Scheme::swe ? 3 : 1; }

    void validate() const {
        if (cfl <= 0.0 || cfl > 1.0)
            throw std::invalid_argument("SimConfig: CFL must be in (0, 1]");
        if (nx < 2) throw std::invalid_argument("SimConfig: nx too small");
        if (t_end < 0.0) throw std::invalid_argument("SimConfig: negative t_end");
    }
};

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

/// Upwind flux Q(WL, WR, N) = WL max(a Nx + b Ny, 0) + WR min(a Nx + b Ny, 0).
inline double flux_upwind(double wl, double wr, std::array<int, 2> n,
                          double alpha, double beta) {
    const double speed = alpha * n[0] + beta * n[1];
    return wl * std::max(speed, 0.0) + wr * std::min(speed, 0.0);
}

struct TransportFlux {
    static constexpr std::size_t m = 1;
    double alpha, beta;
    std::array<double, 1> operator()(std::span<const double> wl,
                                     std::span<const double> wr,
                                     std::array<int, 2> n) const {
        return {flux_upwind(wl[0], wr[0], n, alpha, beta)};
    }
};

// ---------------------------------------------------------------------------
// Shallow water
// ---------------------------------------------------------------------------

/// Physical flux Q(W, N) for W = (h, hu, hv).
inline std::array<double, 3> swe_physical_flux(std::span<const double> w,
                                               std::array<int, 2> n, double g) {
    const double h = w[0], hu = w[1], hv = w[2];
    const double un = (hu * n[0] + hv * n[1]) / h;
    return {h * un, hu * un + 0.5 * g * h * h * n[0],
            hv * un + 0.5 * g * h * h * n[1]};
}

namespace detail {

// Depth function branch for one side of the Riemann problem:
// rarefaction for h <= hs, shock for h > hs.
inline double phi_side(double h, double hs, double g) {
    if (h <= hs) return 2.0 * (std::sqrt(g * h) - std::sqrt(g * hs));
    return (h - hs) * std::sqrt(g * (h + hs) / (2.0 * h * hs));
}

inline double phi_side_deriv(double h, double hs, double g) {
    if (h <= hs) return std::sqrt(g / h);
    const double a = std::sqrt(g * (h + hs) / (2.0 * h * hs));
    return a - (h - hs) * g / (4.0 * a * h * h);
}

}  // namespace detail

/// Exact shallow-water Riemann solver for the 1-D normal problem.
struct SweRiemann {
    double g = 9.81;
    double tol = 1e-10;
    int max_iter = 100;

    /// Star-region depth from phi(h*) = fL(h*) + fR(h*) + uR - uL = 0,
    /// Newton iteration started from the two-rarefaction approximation.
    double solve_hstar(double hl, double ul, double hr, double ur) const {
        if (hl <= 0.0 || hr <= 0.0)
            throw std::domain_error("SweRiemann: water depth must be positive");
        // two-rarefaction initial guess
        const double cl = std::sqrt(g * hl), cr = std::sqrt(g * hr);
        double h = std::pow(0.5 * (cl + cr) + 0.25 * (ul - ur), 2) / g;
        h = std::max(h, 1e-12);
        for (int it = 0; it < max_iter; ++it) {
            const double f = detail::phi_side(h, hl, g) + detail::phi_side(h, hr, g) + ur - ul;
            const double df = detail::phi_side_deriv(h, hl, g) + detail::phi_side_deriv(h, hr, g);
            double dh = f / df;
            if (h - dh <= 0.0) dh = h / 2.0;  // keep iterate positive
            h -= dh;
            if (std::abs(dh) < tol) return h;
        }
        throw riemann_error("SweRiemann: Newton iteration did not converge (hl=" +
                            std::to_string(hl) + ", hr=" + std::to_string(hr) + ")");
    }

    /// Sample the self-similar solution at xi = x/t and return (h, un, ut)
    /// with ut taken from the upwind side of the contact.
    std::array<double, 3> sample(double hl, double ul, double utl, double hr,
                                 double ur, double utr, double xi) const {
        const double hs = solve_hstar(hl, ul, hr, ur);
        const double us = 0.5 * (ul + ur) +
                          0.5 * (detail::phi_side(hs, hr, g) - detail::phi_side(hs, hl, g));
        const double ut = xi <= us ? utl : utr;
        if (xi <= us) {
            // left wave
            const double cl = std::sqrt(g * hl), cs = std::sqrt(g * hs);
            if (hs > hl) {  // left shock
                const double sl = ul - cl * std::sqrt(0.5 * (hs + hl) * hs / (hl * hl));
                if (xi <= sl) return {hl, ul, ut};
                return {hs, us, ut};
            }
            // left rarefaction
            const double head = ul - cl, tail = us - cs;
            if (xi <= head) return {hl, ul, ut};
            if (xi >= tail) return {hs, us, ut};
            const double u = (ul + 2.0 * cl + 2.0 * xi) / 3.0;
            const double c = (ul + 2.0 * cl - xi) / 3.0;
            return {c * c / g, u, ut};
        }
        // right wave
        const double crr = std::sqrt(g * hr), cs = std::sqrt(g * hs);
        if (hs > hr) {  // right shock
            const double sr = ur + crr * std::sqrt(0.5 * (hs + hr) * hs / (hr * hr));
            if (xi >= sr) return {hr, ur, ut};
            return {hs, us, ut};
        }
        // right rarefaction
        const double head = ur + crr, tail = us + cs;
        if (xi >= head) return {hr, ur, ut};
        if (xi <= tail) return {hs, us, ut};
        const double u = (ur - 2.0 * crr + 2.0 * xi) / 3.0;
        const double c = (-ur + 2.0 * crr + xi) / 3.0;
        return {c * c / g, u, ut};
    }
};

/// Godunov flux: rotate into the interface frame, sample the exact Riemann
/// solution at xi = 0, evaluate the physical flux there, rotate back.
inline std::array<double, 3> flux_godunov_swe(std::span<const double> wl,
                                              std::span<const double> wr,
                                              std::array<int, 2> n, double g) {
    const double hl = wl[0], hr = wr[0];
    if (hl <= 0.0 || hr <= 0.0)
        throw std::domain_error("flux_godunov_swe: water depth must be positive");
    const double nx = n[0], ny = n[1];
    // normal and tangential velocities (tangent T = (-Ny, Nx))
    const double ul = (wl[1] * nx + wl[2] * ny) / hl;
    const double utl = (-wl[1] * ny + wl[2] * nx) / hl;
    const double ur = (wr[1] * nx + wr[2] * ny) / hr;
    const double utr = (-wr[1] * ny + wr[2] * nx) / hr;

    SweRiemann solver{g};
    const auto [h, un, ut] = solver.sample(hl, ul, utl, hr, ur, utr, 0.0);

    const double fn_mass = h * un;
    const double fn_mom = h * un * un + 0.5 * g * h * h;
    const double ft_mom = h * un * ut;
    return {fn_mass, fn_mom * nx - ft_mom * ny, fn_mom * ny + ft_mom * nx};
}

struct SweFlux {
    static constexpr std::size_t m = 3;
    double g;
    std::array<double, 3> operator()(std::span<const double> wl,
                                     std::span<const double> wr,
                                     std::array<int, 2> n) const {
        return flux_godunov_swe(wl, wr, n, g);
    }
};

// ---------------------------------------------------------------------------
// FV update
// ---------------------------------------------------------------------------

/// One FV step on a 2-D patch: every true cell except the outermost ghost
/// ring is updated (double-buffered, `next` must not alias `cur`).
template <typename Flux>
inline void fv_step(const Patch& cur, Patch& next, const Flux& flux, double dt,
                    double dx) {
    constexpr std::size_t m = Flux::m;
    const std::size_t nx = cur.true_dims[0], ny = cur.true_dims[1];
    const double r = dt / dx;
    std::array<double, m> w, wn, out;
    for (std::size_t i = 1; i + 1 < nx; ++i) {
        for (std::size_t j = 1; j + 1 < ny; ++j) {
            for (std::size_t c = 0; c < m; ++c)
                w[c] = cur.comps[c].values[i * ny + j];
            out = w;
            for (const auto& n : directions) {
                const std::size_t ii = i + static_cast<std::size_t>(n[0]);
                const std::size_t jj = j + static_cast<std::size_t>(n[1]);
                for (std::size_t c = 0; c < m; ++c)
                    wn[c] = cur.comps[c].values[ii * ny + jj];
                const auto f = flux(w, wn, n);
                for (std::size_t c = 0; c < m; ++c) out[c] -= r * f[c];
            }
            for (std::size_t c = 0; c < m; ++c)
                next.comps[c].values[i * ny + j] = out[c];
        }
    }
}

/// CFL time step. Transport: dt = CFL dx / max(alpha, beta). Shallow water:
/// dt = CFL dx / max over cells of (|u| + c, |v| + c).
inline double cfl_dt(const PatchGrid& g, const SimConfig& cfg) {
    cfg.validate();
    if (cfg.scheme == Scheme::transport) {
        const double vmax = std::max(cfg.alpha, cfg.beta);
        if (vmax <= 0.0) throw std::invalid_argument("cfl_dt: nonpositive speed");
        return cfg.cfl * cfg.dx() / vmax;
    }
    double vmax = 0.0;
    for (const auto& p : g.patches) {
        const std::size_t ny = p.true_dims[1];
        for (std::size_t i = 1; i <= p.logical[0]; ++i) {
            for (std::size_t j = 1; j <= p.logical[1]; ++j) {
                const double h = p.comps[0].values[i * ny + j];
                if (h <= 0.0) throw std::domain_error("cfl_dt: nonpositive depth");
                const double c = std::sqrt(cfg.gravity * h);
                const double u = std::abs(p.comps[1].values[i * ny + j] / h);
                const double v = std::abs(p.comps[2].values[i * ny + j] / h);
                vmax = std::max({vmax, u + c, v + c});
            }
        }
    }
    if (vmax <= 0.0) throw std::invalid_argument("cfl_dt: zero wave speed");
    return cfg.cfl * cfg.dx() / vmax;
}

// ---------------------------------------------------------------------------
// Exact transport solution and error norm
// ---------------------------------------------------------------------------

inline double wrap_unit(double x) {
    x = std::fmod(x, 1.0);
    return x < 0.0 ? x + 1.0 : x;
}

/// Gaussian bump advected at (alpha, beta) with periodic wraparound,
/// evaluated on the global point grid. f_init is centered mid-domain.
inline Field exact_transport(double t, const SimConfig& cfg) {
    Field out{{cfg.nx, cfg.nx}};
    const double dx = cfg.dx();
    for (std::size_t i = 0; i < cfg.nx; ++i) {
        for (std::size_t j = 0; j < cfg.nx; ++j) {
            // minimal periodic image of the displacement from the center
            double px = wrap_unit(i * dx - cfg.alpha * t) - 0.5;
            double py = wrap_unit(j * dx - cfg.beta * t) - 0.5;
            if (px < -0.5) px += 1.0;
            if (px >= 0.5) px -= 1.0;
            if (py < -0.5) py += 1.0;
            if (py >= 0.5) py -= 1.0;
            out.values[i * cfg.nx + j] = 1.0 + std::exp(-30.0 * (px * px + py * py));
        }
    }
    return out;
}

/// Cell-volume-scaled sum of squared differences (no square root).
inline double l2_error(const Field& sim, const Field& exact, const SimConfig& cfg) {
    if (sim.dims != exact.dims)
        throw std::invalid_argument("l2_error: dims mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < sim.size(); ++i) {
        const double d = sim.values[i] - exact.values[i];
        sum += d * d;
    }
    const double area = cfg.domain_length * cfg.domain_length;
    return area / static_cast<double>(sim.size()) * sum;
}

}  // namespace wavegrid
