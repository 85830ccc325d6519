// berry.hpp — gauge-invariant link-variable Berry fluxes for two-band Bloch Hamiltonians
//
// Every routine takes a callable k -> Eigen::Matrix2cd. Fluxes are sums of plaquette
// phases arg(U12 U23 U34 U41) of the lower band, so the flux through any closed
// surface is an exact multiple of 2 pi.

#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "weylqed/core.hpp"

namespace weylqed::berry {

struct BandPair {
    double lower{0.0};
    double upper{0.0};
    Eigen::Vector2cd lower_vec;
    Eigen::Vector2cd upper_vec;
    bool degenerate{false};
};

/// Diagonalizes a 2x2 Hermitian matrix. Eigenvectors are gauge fixed: the
/// largest-magnitude component is made real and positive.
inline BandPair diagonalize(const Eigen::Matrix2cd& h, double degeneracy_tol = 1e-12) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(h);
    BandPair out;
    out.lower = es.eigenvalues()(0);
    out.upper = es.eigenvalues()(1);
    auto fix = [](Eigen::Vector2cd v) {
        const int big = std::abs(v(0)) >= std::abs(v(1)) ? 0 : 1;
        const cplx phase = std::abs(v(big)) > 0.0 ? std::conj(v(big)) / std::abs(v(big)) : cplx(1.0);
        return Eigen::Vector2cd(v * phase);
    };
    out.lower_vec = fix(es.eigenvectors().col(0));
    out.upper_vec = fix(es.eigenvectors().col(1));
    out.degenerate = (out.upper - out.lower) < degeneracy_tol;
    return out;
}

inline cplx link(const Eigen::Vector2cd& a, const Eigen::Vector2cd& b) {
    const cplx o = a.dot(b); // conj(a) . b
    const double m = std::abs(o);
    return m > 0.0 ? o / m : cplx(1.0);
}

/// Berry phase of the lower band around the oriented loop u0 -> u1 -> u2 -> u3 -> u0.
inline double plaquette_flux(const Eigen::Vector2cd& u0, const Eigen::Vector2cd& u1, const Eigen::Vector2cd& u2,
                             const Eigen::Vector2cd& u3) {
    return -std::arg(link(u0, u1) * link(u1, u2) * link(u2, u3) * link(u3, u0));
}

struct SurfaceFlux {
    double flux{0.0};
    double min_gap{0.0};
    [[nodiscard]] int charge() const { return static_cast<int>(std::lround(flux / (2.0 * pi))); }
};

/// Lower-band Berry flux out of the surface of the cube centred at `center` with
/// half-width `half_width`, sampled by n x n plaquettes per face. For h = k.sigma the
/// charge is +1.
template <class BlochFn>
SurfaceFlux box_flux(BlochFn&& h_of_k, const Vec3& center, double half_width, int n) {
    // Each face is (normal axis, sign, u axis, v axis) with u x v along the outward normal.
    struct Face {
        int normal;
        double sign;
        int u;
        int v;
    };
    static constexpr std::array<Face, 6> faces{{{0, +1, 1, 2},
                                                {0, -1, 2, 1},
                                                {1, +1, 2, 0},
                                                {1, -1, 0, 2},
                                                {2, +1, 0, 1},
                                                {2, -1, 1, 0}}};
    SurfaceFlux out;
    out.min_gap = std::numeric_limits<double>::infinity();
    const int m = n + 1;
    std::vector<Eigen::Vector2cd> u(static_cast<std::size_t>(m * m));
    for (const Face& f : faces) {
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                Vec3 k = center;
                k(f.normal) += f.sign * half_width;
                k(f.u) += half_width * (-1.0 + 2.0 * i / n);
                k(f.v) += half_width * (-1.0 + 2.0 * j / n);
                const BandPair bp = diagonalize(h_of_k(k));
                out.min_gap = std::min(out.min_gap, bp.upper - bp.lower);
                u[static_cast<std::size_t>(i * m + j)] = bp.lower_vec;
            }
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                out.flux += plaquette_flux(u[static_cast<std::size_t>(i * m + j)], u[static_cast<std::size_t>((i + 1) * m + j)],
                                           u[static_cast<std::size_t>((i + 1) * m + j + 1)],
                                           u[static_cast<std::size_t>(i * m + j + 1)]);
    }
    return out;
}

struct PlaneField {
    int n{0};
    double offset{0.0};                 // fixed out-of-plane momentum
    std::vector<double> axis;           // mesh momenta along both in-plane axes
    std::vector<double> curvature;      // per plaquette, flux / plaquette area, row-major [i_first][i_second]
    std::vector<double> flux;           // per plaquette
    std::vector<unsigned char> flagged; // touches a mesh point whose degeneracy could not be lifted
    double total_flux{0.0};
    int flagged_count{0};
    int displaced_points{0};
};

/// Lower-band plaquette fluxes on an n x n periodic mesh of the plane spanned by
/// momentum axes (first, second) with the remaining component fixed to `offset`.
/// The mesh covers [-pi, pi)^2 shifted by half a cell; `h_of_k` must be
/// 2 pi-periodic in both in-plane directions.
///
/// A mesh point sitting on a band degeneracy is displaced inside its cell by
/// step/4, step/8, step/16 in turn. Displaced points are shared by the four
/// adjacent plaquettes, so the torus flux stays an exact multiple of 2 pi. Points
/// still degenerate after three displacements flag their plaquettes.
template <class BlochFn>
PlaneField plane_flux(BlochFn&& h_of_k, int first, int second, double offset, int n, double degeneracy_tol = 1e-9,
                      int max_displacements = 3) {
    const int third = 3 - first - second;
    const double step = 2.0 * pi / n;
    PlaneField out;
    out.n = n;
    out.offset = offset;
    out.axis.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.axis[static_cast<std::size_t>(i)] = -pi + (i + 0.5) * step;

    auto point = [&](double a, double b) {
        Vec3 k;
        k(first) = a;
        k(second) = b;
        k(third) = offset;
        return k;
    };
    std::vector<BandPair> corner(static_cast<std::size_t>(n * n));
    std::vector<unsigned char> unresolved(static_cast<std::size_t>(n * n), 0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double a = out.axis[static_cast<std::size_t>(i)];
            const double b = out.axis[static_cast<std::size_t>(j)];
            BandPair bp = diagonalize(h_of_k(point(a, b)), degeneracy_tol);
            double shift = step / 2.0;
            for (int s = 0; s < max_displacements && bp.degenerate; ++s) {
                shift *= 0.5;
                bp = diagonalize(h_of_k(point(a + shift, b + 0.61803398875 * shift)), degeneracy_tol);
                if (s == 0) ++out.displaced_points;
            }
            const auto idx = static_cast<std::size_t>(i * n + j);
            unresolved[idx] = bp.degenerate ? 1 : 0;
            corner[idx] = bp;
        }
    }

    out.flux.assign(static_cast<std::size_t>(n * n), 0.0);
    out.curvature.assign(static_cast<std::size_t>(n * n), 0.0);
    out.flagged.assign(static_cast<std::size_t>(n * n), 0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int i1 = (i + 1) % n;
            const int j1 = (j + 1) % n;
            const std::array<std::size_t, 4> c{static_cast<std::size_t>(i * n + j), static_cast<std::size_t>(i1 * n + j),
                                               static_cast<std::size_t>(i1 * n + j1), static_cast<std::size_t>(i * n + j1)};
            const auto idx = c[0];
            if (unresolved[c[0]] || unresolved[c[1]] || unresolved[c[2]] || unresolved[c[3]]) {
                out.flagged[idx] = 1;
                ++out.flagged_count;
            }
            const double f = plaquette_flux(corner[c[0]].lower_vec, corner[c[1]].lower_vec, corner[c[2]].lower_vec,
                                            corner[c[3]].lower_vec);
            out.flux[idx] = f;
            out.curvature[idx] = f / (step * step);
            out.total_flux += f;
        }
    }
    return out;
}

} // namespace weylqed::berry
