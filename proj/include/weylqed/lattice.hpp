// lattice.hpp — the staggered-hopping Weyl photonic bath in real and momentum space
//
// Conventions. Sites r = (x, y, z) on an L^3 torus; sublattice A when x + y is even.
// Bonds: +x carries J, +y carries -(-1)^{x+y} J, +z carries (-1)^{x+y} J; on-site
// energy (-1)^{x+y} M.
//
// The staggering doubles the cell in the x-y plane. Magnetic cell: lattice vectors
// a1 = (1, 1, 0), a2 = (1, -1, 0), a3 = (0, 0, 1) with A at the origin and B at
// tau_B = (1, 0, 0). Momenta are always quoted in units of 1/a of the original cubic
// lattice; k and k + Q with Q = (pi, pi, 0) are the same point of the reduced zone.
// The representative used for reporting has k_y in [-pi/2, pi/2).
//
// Site-centred Bloch gauge (phases at site positions):
//   H(k) = d(k).sigma,  d = (2J cos k_x, 2J sin k_y, 2J cos k_z + M).
// It is not periodic under reciprocal-lattice shifts; bloch_hamiltonian_periodic()
// applies the cell-origin gauge, which is.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "weylqed/berry.hpp"
#include "weylqed/core.hpp"
#include "weylqed/optimize.hpp"
#include "weylqed/parallel.hpp"

namespace weylqed {

using SparseRealMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using BlochMatrix = Eigen::Matrix2cd;

struct Bond {
    std::size_t from;
    std::size_t to;
    double amplitude;
};

/// One entry per (site, +x/+y/+z) pair, 3 L^3 in total.
inline std::vector<Bond> bond_list(const LatticeParams& p) {
    p.validate();
    const int L = p.size;
    std::vector<Bond> bonds;
    bonds.reserve(3 * p.site_count());
    for (int x = 0; x < L; ++x)
        for (int y = 0; y < L; ++y)
            for (int z = 0; z < L; ++z) {
                const SiteIndex r{x, y, z};
                const double s = stagger(r.sublattice());
                const std::size_t i = r.linear(L);
                bonds.push_back({i, SiteIndex{x + 1, y, z}.linear(L), p.hopping});
                bonds.push_back({i, SiteIndex{x, y + 1, z}.linear(L), -s * p.hopping});
                bonds.push_back({i, SiteIndex{x, y, z + 1}.linear(L), s * p.hopping});
            }
    return bonds;
}

inline SparseRealMatrix build_real_space_hamiltonian(const LatticeParams& p) {
    const auto bonds = bond_list(p);
    const auto n = static_cast<Eigen::Index>(p.site_count());
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(2 * bonds.size() + p.site_count());
    for (const Bond& b : bonds) {
        t.emplace_back(static_cast<Eigen::Index>(b.from), static_cast<Eigen::Index>(b.to), b.amplitude);
        t.emplace_back(static_cast<Eigen::Index>(b.to), static_cast<Eigen::Index>(b.from), b.amplitude);
    }
    for (std::size_t i = 0; i < p.site_count(); ++i) {
        const SiteIndex r = SiteIndex::from_linear(i, p.size);
        if (p.offset != 0.0)
            t.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), stagger(r.sublattice()) * p.offset);
    }
    SparseRealMatrix h(n, n);
    h.setFromTriplets(t.begin(), t.end());
    h.prune(0.0);
    return h;
}

/// d(k) of the site-centred Bloch Hamiltonian.
inline Vec3 bath_vector(const LatticeParams& p, const Vec3& k) {
    const double a = p.lattice_constant;
    return {2.0 * p.hopping * std::cos(k.x() * a), 2.0 * p.hopping * std::sin(k.y() * a),
            2.0 * p.hopping * std::cos(k.z() * a) + p.offset};
}

inline BlochMatrix bloch_hamiltonian(const LatticeParams& p, const Vec3& k) { return from_pauli(bath_vector(p, k)); }

/// Cell-origin gauge: H_AB picks up exp(-i k . tau_B). Periodic in the reduced zone.
inline BlochMatrix bloch_hamiltonian_periodic(const LatticeParams& p, const Vec3& k) {
    BlochMatrix h = bloch_hamiltonian(p, k);
    const cplx phase = std::exp(-I * k.x() * p.lattice_constant);
    h(0, 1) *= phase;
    h(1, 0) = std::conj(h(0, 1));
    return h;
}

/// Maps k to the reporting representative: k_y in [-pi/2, pi/2), other components in [-pi, pi).
inline Vec3 reduce_momentum(Vec3 k) {
    auto wrap_pi = [](double v) {
        double w = std::fmod(v + pi, 2.0 * pi);
        if (w < 0) w += 2.0 * pi;
        return w - pi;
    };
    for (int i = 0; i < 3; ++i) k(i) = wrap_pi(k(i));
    if (k.y() >= 0.5 * pi || k.y() < -0.5 * pi) {
        k.x() = wrap_pi(k.x() + pi);
        k.y() = wrap_pi(k.y() + pi);
    }
    return k;
}

/// Distance between two momenta modulo the reduced-zone reciprocal lattice.
inline double momentum_distance(const Vec3& a, const Vec3& b) {
    auto periodic = [](double v) {
        double w = std::fmod(v, 2.0 * pi);
        if (w > pi) w -= 2.0 * pi;
        if (w < -pi) w += 2.0 * pi;
        return w;
    };
    double best = std::numeric_limits<double>::infinity();
    for (double shift : {0.0, pi}) {
        const Vec3 d{periodic(a.x() - b.x() + shift), periodic(a.y() - b.y() + shift), periodic(a.z() - b.z())};
        best = std::min(best, d.norm());
    }
    return best;
}

struct DispersionSample {
    Vec3 momentum;
    double omega_minus{0.0};
    double omega_plus{0.0};
    Eigen::Vector2cd lower;
    Eigen::Vector2cd upper;
    bool gauge_ambiguous{false};
};

inline DispersionSample bands(const LatticeParams& p, const Vec3& k) {
    const berry::BandPair bp = berry::diagonalize(bloch_hamiltonian(p, k), 1e-12 * p.hopping);
    return {k, bp.lower, bp.upper, bp.lower_vec, bp.upper_vec, bp.degenerate};
}

/// Eigenvalues of the L^3 lattice from the Bloch form on the commensurate grid, sorted.
inline std::vector<double> commensurate_spectrum(const LatticeParams& p) {
    p.validate();
    const int L = p.size;
    std::vector<double> out;
    out.reserve(p.site_count());
    for (int nx = 0; nx < L / 2; ++nx) // one representative of each (k, k + Q) pair
        for (int ny = 0; ny < L; ++ny)
            for (int nz = 0; nz < L; ++nz) {
                const Vec3 k = 2.0 * pi / (L * p.lattice_constant) * Vec3(nx, ny, nz);
                const double w = bath_vector(p, k).norm();
                out.push_back(-w);
                out.push_back(w);
            }
    std::sort(out.begin(), out.end());
    return out;
}

/// Cached cos/sin tables of a Gamma-centred N^3 grid, k_i = 2 pi n_i / (N a).
struct MomentumGrid {
    int n{0};
    std::vector<double> dx, dy, dz; // per-axis components of d(k)

    MomentumGrid(const LatticeParams& p, int n_per_axis) : n(n_per_axis) {
        if (n < 2 || n % 2 != 0) throw InvalidInput("momentum grid must be even, got " + std::to_string(n));
        dx.resize(static_cast<std::size_t>(n));
        dy.resize(static_cast<std::size_t>(n));
        dz.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double k = 2.0 * pi * i / n;
            dx[static_cast<std::size_t>(i)] = 2.0 * p.hopping * std::cos(k);
            dy[static_cast<std::size_t>(i)] = 2.0 * p.hopping * std::sin(k);
            dz[static_cast<std::size_t>(i)] = 2.0 * p.hopping * std::cos(k) + p.offset;
        }
    }

    [[nodiscard]] double count() const { return static_cast<double>(n) * n * n; }

    /// Deterministic sum of f(dx, dy, dz) over the grid, one chunk per k_x plane.
    template <class T, class F>
    T sum(F&& f, T zero = T{}) const {
        return parallel::ordered_sum<T>(
            n,
            [&](int ix) {
                T acc = zero;
                const double x = dx[static_cast<std::size_t>(ix)];
                for (int iy = 0; iy < n; ++iy) {
                    const double y = dy[static_cast<std::size_t>(iy)];
                    for (int iz = 0; iz < n; ++iz) acc += f(x, y, dz[static_cast<std::size_t>(iz)]);
                }
                return acc;
            },
            zero);
    }

    /// Smallest |d(k)| on the grid: the lowest positive level.
    [[nodiscard]] double min_level() const {
        double best = std::numeric_limits<double>::infinity();
        for (double x : dx)
            for (double y : dy)
                for (double z : dz) best = std::min(best, x * x + y * y + z * z);
        return std::sqrt(best);
    }
};

/// Element-wise summable buffer for ordered_sum reductions.
struct BinAccumulator {
    std::vector<double> v;
    BinAccumulator& operator+=(const BinAccumulator& o) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
        return *this;
    }
};

struct DosHistogram {
    std::vector<double> bin_edges;
    std::vector<double> density; // per site, integrates to 1
    double broadening{0.0};
    int grid{0};
    std::vector<std::string> warnings;

    [[nodiscard]] double bin_width() const { return bin_edges[1] - bin_edges[0]; }
    [[nodiscard]] double center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
    [[nodiscard]] double integral() const {
        double s = 0.0;
        for (double d : density) s += d;
        return s * bin_width();
    }
    /// D(omega) by linear interpolation between bin centres; zero outside the range.
    [[nodiscard]] double at(double omega) const {
        const double w = bin_width();
        const double pos = (omega - bin_edges.front()) / w - 0.5;
        if (pos < 0.0 || pos > static_cast<double>(density.size() - 1)) return 0.0;
        const auto i = static_cast<std::size_t>(std::floor(pos));
        const double t = pos - static_cast<double>(i);
        if (i + 1 >= density.size()) return density.back();
        return (1.0 - t) * density[i] + t * density[i + 1];
    }
};

/// Gaussian-broadened density of states of both bands on a Gamma-centred grid.
/// Each eigenvalue contributes the exact bin integral of its Gaussian.
inline DosHistogram dos(const LatticeParams& p, int grid_per_axis, double eta, double bin_width = 0.0) {
    p.validate();
    if (grid_per_axis < 16) throw InvalidInput("dos grid must be >= 16 per axis");
    if (!(eta > 0.0)) throw InvalidInput("dos broadening must be positive");
    if (bin_width <= 0.0) bin_width = 0.5 * eta;

    const MomentumGrid g(p, grid_per_axis);
    const double top = std::sqrt(8.0 + std::pow(2.0 + std::abs(p.offset) / p.hopping, 2)) * p.hopping;
    const double half_range = top + 6.0 * eta;
    const int half_bins = static_cast<int>(std::ceil(half_range / bin_width));
    const int nb = 2 * half_bins;

    DosHistogram h;
    h.broadening = eta;
    h.grid = grid_per_axis;
    h.bin_edges.resize(static_cast<std::size_t>(nb + 1));
    for (int i = 0; i <= nb; ++i) h.bin_edges[static_cast<std::size_t>(i)] = (i - half_bins) * bin_width;

    const double spacing = 2.0 * std::sqrt(3.0) * p.hopping * 2.0 * pi / grid_per_axis;
    if (eta < spacing)
        h.warnings.push_back("broadening " + std::to_string(eta) + " is below the grid level spacing ~" +
                             std::to_string(spacing) + "; histogram will be ragged");

    const double inv = 1.0 / (std::sqrt(2.0) * eta);
    const int reach = static_cast<int>(std::ceil(7.0 * eta / bin_width)) + 1;
    using Acc = BinAccumulator;
    const int n = grid_per_axis;
    Acc total = parallel::ordered_sum<Acc>(
        n,
        [&](int ix) {
            Acc acc{std::vector<double>(static_cast<std::size_t>(nb), 0.0)};
            const double x = g.dx[static_cast<std::size_t>(ix)];
            for (int iy = 0; iy < n; ++iy)
                for (int iz = 0; iz < n; ++iz) {
                    const double y = g.dy[static_cast<std::size_t>(iy)];
                    const double z = g.dz[static_cast<std::size_t>(iz)];
                    const double w = std::sqrt(x * x + y * y + z * z);
                    for (double e : {-w, w}) {
                        const int c = static_cast<int>(std::floor(e / bin_width)) + half_bins;
                        const int lo = std::max(0, c - reach);
                        const int hi = std::min(nb - 1, c + reach);
                        double prev = std::erf((h.bin_edges[static_cast<std::size_t>(lo)] - e) * inv);
                        for (int b = lo; b <= hi; ++b) {
                            const double next = std::erf((h.bin_edges[static_cast<std::size_t>(b + 1)] - e) * inv);
                            acc.v[static_cast<std::size_t>(b)] += 0.5 * (next - prev);
                            prev = next;
                        }
                    }
                }
            return acc;
        },
        Acc{std::vector<double>(static_cast<std::size_t>(nb), 0.0)});
    h.density.resize(static_cast<std::size_t>(nb));
    const double norm = 1.0 / (2.0 * g.count() * bin_width);
    for (int b = 0; b < nb; ++b) h.density[static_cast<std::size_t>(b)] = total.v[static_cast<std::size_t>(b)] * norm;
    return h;
}

struct PowerFit {
    double exponent{0.0};
    double r_squared{0.0};
    int points{0};
};

/// Least-squares slope of log D against log |omega| over bins with lo <= |omega| <= hi.
inline PowerFit dos_exponent(const DosHistogram& h, double lo, double hi) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < h.density.size(); ++i) {
        const double w = std::abs(h.center(i));
        if (w >= lo && w <= hi && h.density[i] > 0.0) {
            x.push_back(std::log(w));
            y.push_back(std::log(h.density[i]));
        }
    }
    if (x.size() < 4) throw InvalidInput("too few DOS bins in fit window");
    const auto f = optimize::least_squares_line(x, y);
    return {f.slope, f.r_squared, static_cast<int>(x.size())};
}

namespace detail {

inline double half_gap_at(const LatticeParams& p, std::span<const double> k) {
    return bath_vector(p, Vec3(k[0], k[1], k[2])).norm();
}

/// Grid minimum of |d| refined by simplex descent.
inline std::pair<Vec3, double> refine_min_level(const LatticeParams& p, const Vec3& start, double step) {
    auto f = [&](std::span<const double> k) { return half_gap_at(p, k); };
    auto m = optimize::nelder_mead(f, {start.x(), start.y(), start.z()}, step, 1e-13, 20000);
    // restart once from the result; simplex descent on a cone can stall early
    m = optimize::nelder_mead(f, m.x, 0.1 * step, 1e-14, 20000);
    return {Vec3(m.x[0], m.x[1], m.x[2]), m.value};
}

} // namespace detail

/// Direct band gap min_k (omega_plus - omega_minus), grid search refined by local descent.
inline double gap(const LatticeParams& p, int grid_per_axis) {
    p.validate();
    const int n = grid_per_axis;
    double best = std::numeric_limits<double>::infinity();
    Vec3 arg = Vec3::Zero();
    for (int ix = 0; ix < n; ++ix)
        for (int iy = 0; iy < n; ++iy)
            for (int iz = 0; iz < n; ++iz) {
                const Vec3 k = 2.0 * pi / n * Vec3(ix, iy, iz);
                const double w = bath_vector(p, k).norm();
                if (w < best) {
                    best = w;
                    arg = k;
                }
            }
    const auto [k, w] = detail::refine_min_level(p, arg, 2.0 * pi / n);
    return 2.0 * std::min(best, w);
}

struct WeylNode {
    Vec3 momentum;
    double frequency{0.0};
    int chirality{0};
    double flux{0.0}; // Berry flux of the lower band through the enclosing box
    double splitting{0.0};
    double linearity{0.0}; // second- to first-order ratio of the band splitting; 0 when not measured
};

struct WeylNodeSearch {
    std::vector<WeylNode> nodes;
    bool gapped{false};
};

/// All band-touching points of the bath in the reduced zone, with chirality from
/// the lower-band Berry flux through a small cube around each node.
inline WeylNodeSearch find_weyl_nodes(const LatticeParams& p, double tol = 1e-8, int scan_grid = 24) {
    p.validate();
    WeylNodeSearch out;
    if (!p.gapless()) {
        out.gapped = true;
        return out;
    }
    const int n = scan_grid;
    const double step = 2.0 * pi / n;
    std::vector<double> level(static_cast<std::size_t>(n * n * n));
    auto at = [&](int i, int j, int l) -> double& {
        return level[static_cast<std::size_t>((wrap(i, n) * n + wrap(j, n)) * n + wrap(l, n))];
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) at(i, j, l) = bath_vector(p, step * Vec3(i, j, l)).norm();

    std::vector<Vec3> found;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) {
                const double v = at(i, j, l);
                bool is_min = true;
                for (int a = -1; a <= 1 && is_min; ++a)
                    for (int b = -1; b <= 1 && is_min; ++b)
                        for (int c = -1; c <= 1; ++c)
                            if ((a || b || c) && at(i + a, j + b, l + c) < v) {
                                is_min = false;
                                break;
                            }
                if (!is_min || v > 4.0 * p.hopping * step) continue;
                const auto [k, w] = detail::refine_min_level(p, step * Vec3(i, j, l), 0.5 * step);
                if (2.0 * w >= tol) continue;
                const Vec3 r = reduce_momentum(k);
                bool dup = false;
                for (const Vec3& f : found)
                    if (momentum_distance(f, r) < 1e-4) dup = true;
                if (!dup) found.push_back(r);
            }

    std::sort(found.begin(), found.end(), [](const Vec3& a, const Vec3& b) {
        if (std::abs(a.x() - b.x()) > 1e-6) return a.x() < b.x();
        if (std::abs(a.y() - b.y()) > 1e-6) return a.y() < b.y();
        return a.z() < b.z();
    });
    for (const Vec3& k : found) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const Vec3& o : found)
            if (&o != &k) nearest = std::min(nearest, momentum_distance(k, o));
        const double half = std::min(0.05, 0.3 * nearest);
        const auto flux = berry::box_flux([&](const Vec3& q) { return bloch_hamiltonian(p, q); }, k, half, 8);
        const DispersionSample s = bands(p, k);
        out.nodes.push_back({k, 0.5 * (s.omega_minus + s.omega_plus), flux.charge(), flux.flux,
                             s.omega_plus - s.omega_minus, 0.0});
    }
    return out;
}

} // namespace weylqed
