// greens.hpp — bare resolvent G(z) = (z - H_B)^{-1} of the Weyl bath and the emitter self-energy
//
// Momentum sums run over a Gamma-centred N^3 grid of the original cubic zone; each
// reduced-zone point appears twice and the summand is invariant under k -> k + Q, so
//   <r|G|r + delta> = N^-3 sum_k exp(-i k.delta) G_{alpha beta}(k),
// with alpha the sublattice of r. For N = L this is the exact finite-lattice
// resolvent. N = 2 mod 4 never samples a Weyl node, which keeps real-axis sums at
// E = 0 finite for every M.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <vector>

#include <fftw3.h>

#include "weylqed/core.hpp"
#include "weylqed/lattice.hpp"
#include "weylqed/optimize.hpp"
#include "weylqed/parallel.hpp"

namespace weylqed {

/// Infinite-lattice quadrature grid used when no finite lattice is implied.
inline constexpr int default_green_grid = 62;

struct ComplexEnergy {
    double energy{0.0};
    double eta{0.0}; // >= 0, imaginary regularization
    [[nodiscard]] cplx z() const { return {energy, eta}; }
};

struct GreensSample {
    ComplexEnergy z;
    Vec3i displacement;
    Sublattice from{Sublattice::A};
    Sublattice to{Sublattice::A};
    cplx value;
};

namespace detail {

inline cplx bloch_resolvent(Sublattice from, Sublattice to, double dx, double dy, double dz, cplx z, double& min_den) {
    const cplx den = z * z - (dx * dx + dy * dy + dz * dz);
    min_den = std::min(min_den, std::abs(den));
    if (from == to) return (from == Sublattice::A ? z + dz : z - dz) / den;
    return (from == Sublattice::A ? cplx(dx, -dy) : cplx(dx, dy)) / den;
}

inline void check_pole(const ComplexEnergy& z, double min_den, double hopping) {
    if (z.eta == 0.0 && min_den < 1e-12 * hopping * hopping)
        throw InvalidInput("resolvent evaluated on a grid eigenvalue at E = " + std::to_string(z.energy) +
                           " with zero regularization");
}

struct MinDen {
    cplx value;
    double min_den{std::numeric_limits<double>::infinity()};
    MinDen& operator+=(const MinDen& o) {
        value += o.value;
        min_den = std::min(min_den, o.min_den);
        return *this;
    }
};

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// In-place forward 3D DFT, out[m] = sum_n in[n] exp(-2 pi i m.n / N).
inline void forward_dft_3d(std::vector<cplx>& data, int n) {
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_dft_3d(n, n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

} // namespace detail

/// Local element G_{alpha alpha}(z; r, r).
inline cplx green_local(const LatticeParams& p, ComplexEnergy z, Sublattice alpha, int grid = default_green_grid) {
    if (z.eta < 0.0) throw InvalidInput("negative regularization");
    const MomentumGrid g(p, grid);
    const cplx zz = z.z();
    const auto r = g.sum<detail::MinDen>([&](double x, double y, double w) {
        detail::MinDen m;
        m.value = detail::bloch_resolvent(alpha, alpha, x, y, w, zz, m.min_den);
        return m;
    });
    detail::check_pole(z, r.min_den, p.hopping);
    return r.value / g.count();
}

/// Two-point element <r|G(z)|r + displacement> with r on sublattice `from`.
inline cplx green_pair(const LatticeParams& p, ComplexEnergy z, const Vec3i& displacement, Sublattice from, Sublattice to,
                       int grid = default_green_grid) {
    if (z.eta < 0.0) throw InvalidInput("negative regularization");
    if (shifted(from, displacement.x(), displacement.y()) != to)
        throw InvalidInput("sublattice pair inconsistent with displacement parity");
    const MomentumGrid g(p, grid);
    const int n = grid;
    std::array<std::vector<cplx>, 3> phase;
    for (int a = 0; a < 3; ++a) {
        phase[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            phase[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] =
                std::exp(-I * (2.0 * pi * i / n) * static_cast<double>(displacement(a)));
    }
    const cplx zz = z.z();
    const auto r = parallel::ordered_sum<detail::MinDen>(n, [&](int ix) {
        detail::MinDen m;
        for (int iy = 0; iy < n; ++iy) {
            const cplx pxy = phase[0][static_cast<std::size_t>(ix)] * phase[1][static_cast<std::size_t>(iy)];
            for (int iz = 0; iz < n; ++iz) {
                const cplx gk = detail::bloch_resolvent(from, to, g.dx[static_cast<std::size_t>(ix)],
                                                        g.dy[static_cast<std::size_t>(iy)],
                                                        g.dz[static_cast<std::size_t>(iz)], zz, m.min_den);
                m.value += pxy * phase[2][static_cast<std::size_t>(iz)] * gk;
            }
        }
        return m;
    });
    detail::check_pole(z, r.min_den, p.hopping);
    return r.value / g.count();
}

/// G(z; r_e, r_e + delta) for every displacement on the N^3 torus, from one pair of FFTs.
struct GreensField {
    int n{0};
    Sublattice from{Sublattice::A};
    ComplexEnergy z;
    std::vector<cplx> same;  // target on the same sublattice as the source
    std::vector<cplx> other; // target on the other sublattice

    [[nodiscard]] std::size_t index(const Vec3i& d) const {
        return (static_cast<std::size_t>(wrap(d.x(), n)) * n + wrap(d.y(), n)) * n + wrap(d.z(), n);
    }
    /// Element for displacement d; the target sublattice follows from the parity of d.
    [[nodiscard]] cplx at(const Vec3i& d) const {
        const bool flip = ((d.x() + d.y()) % 2) != 0;
        return flip ? other[index(d)] : same[index(d)];
    }
};

inline GreensField green_field(const LatticeParams& p, ComplexEnergy z, Sublattice from, int grid = default_green_grid) {
    if (z.eta < 0.0) throw InvalidInput("negative regularization");
    const MomentumGrid g(p, grid);
    const int n = grid;
    const std::size_t total = static_cast<std::size_t>(n) * n * n;
    GreensField f;
    f.n = n;
    f.from = from;
    f.z = z;
    f.same.resize(total);
    f.other.resize(total);
    const cplx zz = z.z();
    std::vector<double> min_den(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    parallel::for_each(n, [&](int ix) {
        double md = std::numeric_limits<double>::infinity();
        for (int iy = 0; iy < n; ++iy)
            for (int iz = 0; iz < n; ++iz) {
                const std::size_t idx = (static_cast<std::size_t>(ix) * n + iy) * n + iz;
                const double x = g.dx[static_cast<std::size_t>(ix)];
                const double y = g.dy[static_cast<std::size_t>(iy)];
                const double w = g.dz[static_cast<std::size_t>(iz)];
                f.same[idx] = detail::bloch_resolvent(from, from, x, y, w, zz, md);
                f.other[idx] = detail::bloch_resolvent(from, other(from), x, y, w, zz, md);
            }
        min_den[static_cast<std::size_t>(ix)] = md;
    });
    detail::check_pole(z, *std::min_element(min_den.begin(), min_den.end()), p.hopping);
    detail::forward_dft_3d(f.same, n);
    detail::forward_dft_3d(f.other, n);
    const double inv = 1.0 / g.count();
    for (auto& v : f.same) v *= inv;
    for (auto& v : f.other) v *= inv;
    return f;
}

/// Sigma(z) = g^2 G_{alpha alpha}(z; r_e, r_e).
inline cplx self_energy(const LatticeParams& p, double coupling, ComplexEnergy z, Sublattice alpha,
                        int grid = default_green_grid) {
    if (coupling == 0.0) return 0.0;
    return coupling * coupling * green_local(p, z, alpha, grid);
}

/// min_k | |E| - |d(k)| |: distance from E to the nearest bath level of the grid.
inline double level_distance(const LatticeParams& p, double energy, int grid) {
    const MomentumGrid g(p, grid);
    double best = std::numeric_limits<double>::infinity();
    const double e = std::abs(energy);
    for (double x : g.dx)
        for (double y : g.dy)
            for (double z : g.dz) best = std::min(best, std::abs(std::sqrt(x * x + y * y + z * z) - e));
    return best;
}

/// True when E lies below the lowest positive level of the grid, where Sigma(E) is real and smooth.
inline bool inside_grid_gap(const LatticeParams& p, double energy, int grid) {
    return std::abs(energy) < MomentumGrid(p, grid).min_level();
}

/// dSigma/dE on the real axis: five-point central difference with step h and h/2,
/// Richardson-combined.
inline double self_energy_slope(const LatticeParams& p, double coupling, double energy, Sublattice alpha,
                                int grid = default_green_grid, double step = 1e-3) {
    if (coupling == 0.0) return 0.0;
    const double h0 = step * p.hopping;
    if (!inside_grid_gap(p, energy, grid) || level_distance(p, energy, grid) < 4.0 * h0)
        throw InvalidInput("self-energy slope requested at a resonant point E = " + std::to_string(energy) +
                           " (Im Sigma non-negligible)");
    auto sigma = [&](double e) { return self_energy(p, coupling, {e, 0.0}, alpha, grid).real(); };
    auto five_point = [&](double h) {
        return (sigma(energy - 2 * h) - 8 * sigma(energy - h) + 8 * sigma(energy + h) - sigma(energy + 2 * h)) / (12 * h);
    };
    const double coarse = five_point(h0);
    const double fine = five_point(0.5 * h0);
    return (16.0 * fine - coarse) / 15.0;
}

struct Extrapolated {
    cplx value;
    double error{0.0};
};

/// G_{alpha alpha}(E + i0+) from three regularizations eta0, 2 eta0, 3 eta0 and a
/// quadratic fit in eta; the error estimate is the spread to the linear fit.
inline Extrapolated green_local_extrapolated(const LatticeParams& p, double energy, Sublattice alpha,
                                             int grid = default_green_grid, double eta0 = 1e-3) {
    const std::array<double, 3> etas{eta0 * p.hopping, 2 * eta0 * p.hopping, 3 * eta0 * p.hopping};
    std::array<cplx, 3> v;
    for (int i = 0; i < 3; ++i) v[static_cast<std::size_t>(i)] = green_local(p, {energy, etas[static_cast<std::size_t>(i)]}, alpha, grid);
    Extrapolated out;
    out.value = optimize::extrapolate_to_zero(etas, v);
    const cplx linear = 2.0 * v[0] - v[1];
    out.error = std::abs(out.value - linear);
    return out;
}

/// Field version of green_local_extrapolated: every displacement at once.
inline GreensField green_field_extrapolated(const LatticeParams& p, double energy, Sublattice from,
                                            int grid = default_green_grid, double eta0 = 1e-3) {
    const std::array<double, 3> etas{eta0 * p.hopping, 2 * eta0 * p.hopping, 3 * eta0 * p.hopping};
    std::array<GreensField, 3> f;
    for (int i = 0; i < 3; ++i) f[static_cast<std::size_t>(i)] = green_field(p, {energy, etas[static_cast<std::size_t>(i)]}, from, grid);
    GreensField out = f[0];
    out.z = {energy, 0.0};
    for (std::size_t j = 0; j < out.same.size(); ++j) {
        out.same[j] = optimize::extrapolate_to_zero(etas, std::array<cplx, 3>{f[0].same[j], f[1].same[j], f[2].same[j]});
        out.other[j] = optimize::extrapolate_to_zero(etas, std::array<cplx, 3>{f[0].other[j], f[1].other[j], f[2].other[j]});
    }
    return out;
}

} // namespace weylqed
