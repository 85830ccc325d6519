// spin_model.hpp — bound-state-mediated exchange between emitters on every bath site
//
// With the photons eliminated at E = 0, emitters at their critical detunings exchange
// excitations through
//   J^{alpha beta}(delta) = g^2 Re G_{alpha beta}(0 + i0+; delta),
// truncated at Euclidean range s. The Bloch matrix uses the bath's site-centred
// convention, h_{alpha beta}(k) = sum_delta J^{alpha beta}(delta) exp(i k.delta) plus the
// detunings on the diagonal, which cancel the on-site self-energy. As s grows, h(k)
// tends to -g^2 d(k).sigma / |d(k)|^2.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "weylqed/berry.hpp"
#include "weylqed/core.hpp"
#include "weylqed/greens.hpp"
#include "weylqed/lattice.hpp"
#include "weylqed/optimize.hpp"

namespace weylqed {

struct CouplingEntry {
    Vec3i displacement;
    Sublattice from{Sublattice::A};
    Sublattice to{Sublattice::A};
    double value{0.0};     // real exchange coupling
    double imaginary{0.0}; // residual g^2 Im G after extrapolation
};

struct CouplingMap {
    double hopping{1.0};
    double offset{0.0};
    double coupling{0.0};
    double range{0.0};
    int grid{0};
    double detuning_a{0.0}; // Delta_c of an emitter on A
    double detuning_b{0.0};
    std::vector<CouplingEntry> entries;
    double max_imag_ratio{0.0};
    bool dissipative{false}; // some |Im J| / |Re J| above 1e-3
    std::vector<std::string> warnings;

    [[nodiscard]] double detuning(Sublattice s) const { return s == Sublattice::A ? detuning_a : detuning_b; }

    /// J for a displacement from a site on `from`; 0 when out of range.
    [[nodiscard]] double at(const Vec3i& d, Sublattice from) const {
        const auto it = index_.find(key(d, from));
        return it == index_.end() ? 0.0 : entries[it->second].value;
    }
    [[nodiscard]] bool contains(const Vec3i& d, Sublattice from) const { return index_.count(key(d, from)) != 0; }

    void add(const CouplingEntry& e) {
        index_[key(e.displacement, e.from)] = entries.size();
        entries.push_back(e);
    }
    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (const auto& e : entries) m = std::max(m, std::abs(e.value));
        return m;
    }

  private:
    using Key = std::tuple<int, int, int, int>;
    static Key key(const Vec3i& d, Sublattice s) { return {d.x(), d.y(), d.z(), static_cast<int>(s)}; }
    std::map<Key, std::size_t> index_;
};

/// Exchange couplings for all displacements with |delta| <= s, from both sublattices.
inline CouplingMap effective_couplings(const LatticeParams& p, double coupling, double range,
                                       int grid = default_green_grid, double eta0 = 1e-4) {
    if (std::abs(p.offset) > 2.0 * p.hopping) throw InvalidInput("effective couplings require |M| <= 2J");
    if (!(range >= 0.0)) throw InvalidInput("range s must be non-negative");
    if (range >= grid / 2.0) throw InvalidInput("range s must stay below half the momentum grid");
    CouplingMap c;
    c.hopping = p.hopping;
    c.offset = p.offset;
    c.coupling = coupling;
    c.range = range;
    c.grid = grid;
    if (coupling > 0.5 * p.hopping)
        c.warnings.push_back("g = " + std::to_string(coupling) +
                             " J exceeds 0.5 J; the coherent exchange picture assumes g << J");

    const double g2 = coupling * coupling;
    const GreensField fa = green_field_extrapolated(p, 0.0, Sublattice::A, grid, eta0);
    const GreensField fb = green_field_extrapolated(p, 0.0, Sublattice::B, grid, eta0);
    auto field = [&](Sublattice s) -> const GreensField& { return s == Sublattice::A ? fa : fb; };
    c.detuning_a = -g2 * fa.at(Vec3i::Zero()).real();
    c.detuning_b = -g2 * fb.at(Vec3i::Zero()).real();

    const int reach = static_cast<int>(std::floor(range));
    const double r2 = range * range * (1.0 + 1e-12);
    for (Sublattice from : {Sublattice::A, Sublattice::B})
        for (int x = -reach; x <= reach; ++x)
            for (int y = -reach; y <= reach; ++y)
                for (int z = -reach; z <= reach; ++z) {
                    const Vec3i d(x, y, z);
                    if (d.squaredNorm() > r2) continue;
                    const Sublattice to = shifted(from, x, y);
                    // J^{ab}(d) and J^{ba}(-d) are the same matrix element; average the two FFT values
                    const cplx v = 0.5 * g2 * (field(from).at(d) + field(to).at(-d));
                    c.add({d, from, to, v.real(), v.imag()});
                }

    const double floor_value = 1e-10 * g2 / p.hopping;
    for (const auto& e : c.entries)
        if (std::abs(e.value) > floor_value)
            c.max_imag_ratio = std::max(c.max_imag_ratio, std::abs(e.imaginary) / std::abs(e.value));
    c.dissipative = c.max_imag_ratio > 1e-3;
    if (c.dissipative)
        c.warnings.push_back("imaginary coupling parts up to " + std::to_string(c.max_imag_ratio) +
                             " of the real parts: dissipative channel present");
    return c;
}

/// The same couplings cut down to range s (no new Green's function pass).
inline CouplingMap truncate(const CouplingMap& c, double range) {
    if (range > c.range) throw InvalidInput("cannot extend a coupling map beyond its range");
    CouplingMap out;
    out.hopping = c.hopping;
    out.offset = c.offset;
    out.coupling = c.coupling;
    out.range = range;
    out.grid = c.grid;
    out.detuning_a = c.detuning_a;
    out.detuning_b = c.detuning_b;
    out.warnings = c.warnings;
    const double r2 = range * range * (1.0 + 1e-12);
    for (const auto& e : c.entries)
        if (e.displacement.squaredNorm() <= r2) {
            out.add(e);
            if (std::abs(e.value) > 1e-10 * c.coupling * c.coupling / c.hopping)
                out.max_imag_ratio = std::max(out.max_imag_ratio, std::abs(e.imaginary) / std::abs(e.value));
        }
    out.dissipative = out.max_imag_ratio > 1e-3;
    return out;
}

/// Site-centred spin Bloch matrix over the (A, B) emitter sublattices.
inline BlochMatrix spin_bloch(const CouplingMap& c, const Vec3& k) {
    BlochMatrix h = BlochMatrix::Zero();
    for (const auto& e : c.entries) {
        if (e.from == Sublattice::B && e.to == Sublattice::A) continue; // filled from the Hermitian partner
        const cplx phase = std::exp(I * k.dot(e.displacement.cast<double>()));
        h(static_cast<int>(e.from), static_cast<int>(e.to)) += e.value * phase;
    }
    h(0, 0) = h(0, 0).real() + c.detuning_a;
    h(1, 1) = h(1, 1).real() + c.detuning_b;
    h(1, 0) = std::conj(h(0, 1));
    return h;
}

/// Cell-origin gauge; 2 pi periodic along every cubic axis.
inline BlochMatrix spin_bloch_periodic(const CouplingMap& c, const Vec3& k) {
    BlochMatrix h = spin_bloch(c, k);
    h(0, 1) *= std::exp(-I * k.x());
    h(1, 0) = std::conj(h(0, 1));
    return h;
}

struct SpinBandSample {
    double kz{0.0};
    double lower{0.0};
    double upper{0.0};
};

/// Bands along k_z in [-pi, pi] at fixed (k_x, k_y).
inline std::vector<SpinBandSample> spin_band_cut(const CouplingMap& c, double kx, double ky, int n_points) {
    if (n_points < 2) throw InvalidInput("band cut needs at least 2 points");
    std::vector<SpinBandSample> out;
    out.reserve(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double kz = -pi + 2.0 * pi * i / (n_points - 1);
        const auto b = berry::diagonalize(spin_bloch(c, Vec3(kx, ky, kz)));
        out.push_back({kz, b.lower, b.upper});
    }
    return out;
}

struct BandCrossing {
    std::vector<double> crossings; // k_z in [0, pi] where the bands touch
    double min_gap{0.0};           // smallest separation along the cut
    double min_gap_kz{0.0};
    [[nodiscard]] bool found() const { return !crossings.empty(); }
    [[nodiscard]] double first() const { return crossings.front(); }
};

namespace detail {

inline double spin_gap(const CouplingMap& c, const Vec3& k) {
    const auto b = berry::diagonalize(spin_bloch(c, k));
    return b.upper - b.lower;
}

} // namespace detail

/// Band touchings along k_z in [lo, hi] at fixed (k_x, k_y). A touching is a root
/// of the diagonal splitting at which the full splitting is below tol * max|J|.
inline BandCrossing find_band_crossings(const CouplingMap& c, double kx, double ky, double lo = 0.0, double hi = pi,
                                        int scan = 2048, double tol = 1e-8) {
    BandCrossing out;
    const double scale = std::max(c.max_abs(), 1e-300);
    auto diag = [&](double kz) {
        const BlochMatrix h = spin_bloch(c, Vec3(kx, ky, kz));
        return (h(0, 0) - h(1, 1)).real();
    };
    auto gap = [&](double kz) { return detail::spin_gap(c, Vec3(kx, ky, kz)); };

    std::vector<double> kz(static_cast<std::size_t>(scan + 1)), dv(kz.size()), gv(kz.size());
    for (int i = 0; i <= scan; ++i) {
        kz[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / scan;
        dv[static_cast<std::size_t>(i)] = diag(kz[static_cast<std::size_t>(i)]);
        gv[static_cast<std::size_t>(i)] = gap(kz[static_cast<std::size_t>(i)]);
    }
    for (std::size_t i = 0; i + 1 < kz.size(); ++i) {
        double root;
        if (dv[i] == 0.0)
            root = kz[i];
        else if ((dv[i] > 0.0) != (dv[i + 1] > 0.0) && dv[i + 1] != 0.0)
            root = optimize::bracketed_root(diag, kz[i], kz[i + 1], 1e-15);
        else
            continue;
        if (gap(root) < tol * scale) out.crossings.push_back(root);
    }
    if (dv.back() == 0.0 && gap(kz.back()) < tol * scale) out.crossings.push_back(kz.back());

    const auto best = static_cast<std::size_t>(std::min_element(gv.begin(), gv.end()) - gv.begin());
    const double a = kz[best == 0 ? 0 : best - 1];
    const double b = kz[std::min(best + 1, kz.size() - 1)];
    const auto [x, fx] = boost::math::tools::brent_find_minima(gap, a, b, 52);
    out.min_gap = std::min(fx, gv[best]);
    out.min_gap_kz = fx < gv[best] ? x : kz[best];
    if (!out.crossings.empty()) out.min_gap = 0.0;
    return out;
}

using BerryField = berry::PlaneField;

/// Lower-band link curvature on an n x n mesh of the k_y = 0 plane, (k_x, k_z) in
/// [-pi, pi)^2 offset by half a cell. n must be a multiple of 4 so that no mesh
/// point falls on the k_x = +-pi/2 lines.
inline BerryField berry_curvature_plane(const CouplingMap& c, int grid_n) {
    if (grid_n < 4 || grid_n % 4 != 0) throw InvalidInput("Berry mesh size must be a positive multiple of 4");
    return berry::plane_flux([&](const Vec3& k) { return spin_bloch_periodic(c, k); }, 0, 2, 0.0, grid_n,
                             1e-9 * std::max(c.max_abs(), 1e-300));
}

struct SpinNodeSearch {
    std::vector<WeylNode> nodes;    // linear touchings
    std::vector<WeylNode> non_weyl; // touchings failing the linearity test
};

/// Second- to first-order ratio of the band splitting around k, worst case over
/// the six axis directions, from samples at offsets h and 2h.
inline double splitting_linearity(const CouplingMap& c, const Vec3& k, double h) {
    double worst = 0.0;
    for (int axis = 0; axis < 3; ++axis)
        for (double sign : {1.0, -1.0}) {
            Vec3 e = Vec3::Zero();
            e(axis) = sign * h;
            const double g1 = detail::spin_gap(c, k + e);
            const double g2 = detail::spin_gap(c, k + 2.0 * e);
            const double first = 2.0 * g1 - 0.5 * g2;  // a h for g(t) = a t + b t^2
            const double second = 0.5 * g2 - g1;       // b h^2
            const double ratio = std::abs(first) > 0.0 ? std::abs(second) / std::abs(first)
                                                       : std::numeric_limits<double>::infinity();
            worst = std::max(worst, ratio);
        }
    return worst;
}

/// Band touchings of the spin model on the k_x = +-pi/2, k_y = 0 lines, classified
/// by the linearity of the splitting and given a chirality from the flux through a
/// surrounding cube.
inline SpinNodeSearch find_spin_weyl_nodes(const CouplingMap& c, double tol = 1e-8) {
    SpinNodeSearch out;
    std::vector<Vec3> found;
    for (double kx : {-0.5 * pi, 0.5 * pi}) {
        const BandCrossing bc = find_band_crossings(c, kx, 0.0, -pi, pi, 4096, tol);
        for (double kz : bc.crossings) {
            const Vec3 k = reduce_momentum(Vec3(kx, 0.0, kz));
            bool dup = false;
            for (const Vec3& f : found)
                if (momentum_distance(f, k) < 1e-4) dup = true;
            if (!dup) found.push_back(k);
        }
    }
    std::sort(found.begin(), found.end(), [](const Vec3& a, const Vec3& b) {
        if (std::abs(a.x() - b.x()) > 1e-6) return a.x() < b.x();
        return a.z() < b.z();
    });
    for (const Vec3& k : found) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const Vec3& o : found)
            if (&o != &k) nearest = std::min(nearest, momentum_distance(k, o));
        const double half = std::min(0.05, 0.3 * nearest);
        const auto flux = berry::box_flux([&](const Vec3& q) { return spin_bloch_periodic(c, q); }, k, half, 8);
        const auto b = berry::diagonalize(spin_bloch(c, k));
        WeylNode n{k, 0.5 * (b.lower + b.upper), flux.charge(), flux.flux, b.upper - b.lower,
                   splitting_linearity(c, k, 2.0 * pi / 100.0)};
        (n.linearity < 0.1 ? out.nodes : out.non_weyl).push_back(n);
    }
    return out;
}

} // namespace weylqed
