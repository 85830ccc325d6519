// bound_states.hpp — emitter-photon bound state from the secular equation E - Delta - Sigma(E) = 0
//
// The photonic part follows from (E - H_B) C = g C_e |r_e>:
//   C_r = g C_e G(E; r_e, r),
// normalized with C_e^2 (1 + g^2 sum_r |G(E; r_e, r)|^2) = 1. On a finite lattice
// the Green's function is summed on the commensurate grid, so the state is an exact
// eigenvector of the single-excitation Hamiltonian.

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "weylqed/core.hpp"
#include "weylqed/dynamics.hpp"
#include "weylqed/greens.hpp"
#include "weylqed/optimize.hpp"

namespace weylqed {

/// Root of E - Delta - Re Sigma(E) inside the grid's spectral gap around E = 0,
/// bracketed at +-0.9 of the lowest level. Empty when the bracket shows no sign change.
inline std::optional<double> find_bound_state_energy(const LatticeParams& p, const EmitterSpec& e,
                                                     int grid = default_green_grid) {
    if (e.coupling == 0.0) return e.detuning;
    const double edge = 0.9 * MomentumGrid(p, grid).min_level();
    if (!(edge > 0.0)) return std::nullopt; // a grid level at E = 0
    const Sublattice a = e.sublattice();
    auto secular = [&](double E) { return E - e.detuning - self_energy(p, e.coupling, {E, 0.0}, a, grid).real(); };
    const double lo = secular(-edge);
    const double hi = secular(edge);
    if (lo == 0.0) return -edge;
    if (hi == 0.0) return edge;
    if ((lo > 0.0) == (hi > 0.0)) return std::nullopt;
    return optimize::bracketed_root(secular, -edge, edge, 1e-15 * p.hopping);
}

struct CriticalDetuning {
    double offset{0.0};    // M
    double detuning{0.0};  // Delta_c
    double extrapolation_error{0.0};
    bool flagged{false};   // error above 1e-4 J
};

/// Detuning that pins the bound state of an emitter on `alpha` at E = 0:
/// Delta_c = -Re Sigma(0 + i0+), extrapolated from eta0, 2 eta0, 3 eta0.
inline CriticalDetuning critical_detuning(const LatticeParams& p, double coupling, Sublattice alpha = Sublattice::A,
                                          int grid = default_green_grid, double eta0 = 1e-3) {
    if (std::abs(p.offset) > 2.0 * p.hopping) throw InvalidInput("critical detuning requires |M| <= 2J");
    CriticalDetuning c;
    c.offset = p.offset;
    if (coupling == 0.0) return c;
    const Extrapolated g0 = green_local_extrapolated(p, 0.0, alpha, grid, eta0);
    c.detuning = -coupling * coupling * g0.value.real();
    c.extrapolation_error = coupling * coupling * g0.error;
    c.flagged = c.extrapolation_error > 1e-4 * p.hopping;
    return c;
}

/// Z = 1 / (1 - Sigma'(E)). Throws when the slope is >= 1.
inline double residue(const LatticeParams& p, const EmitterSpec& e, double energy, int grid = default_green_grid) {
    const double slope = self_energy_slope(p, e.coupling, energy, e.sublattice(), grid);
    if (slope >= 1.0) throw NumericalFailure("self-energy slope >= 1: unphysical residue");
    return 1.0 / (1.0 - slope);
}

struct BoundState {
    double energy{0.0};
    double emitter_amplitude{0.0}; // C_e >= 0
    double residue{0.0};           // Z from the self-energy slope
    double coupling{0.0};
    SiteIndex emitter;
    int size{0};                   // L of the lattice carrying the field
    std::vector<cplx> field;       // C_r, SiteIndex::linear order

    [[nodiscard]] cplx at(const SiteIndex& r) const { return field[r.linear(size)]; }
    /// Amplitude at the site displaced by d from the emitter.
    [[nodiscard]] cplx relative(const Vec3i& d) const {
        return at({emitter.x + d.x(), emitter.y + d.y(), emitter.z + d.z()});
    }
    [[nodiscard]] double photon_weight() const {
        double s = 0.0;
        for (const cplx& c : field) s += std::norm(c);
        return s;
    }
    /// |C_r| / ((g / J) Z): the display scale in which the emitter's neighbourhood is O(1).
    [[nodiscard]] double display(const SiteIndex& r, double hopping) const {
        return std::abs(at(r)) / (coupling / hopping * residue);
    }
};

/// Bound state on an L^3 periodic lattice (L from `size`, overriding p.size).
inline BoundState bound_state_wavefunction(const LatticeParams& p, const EmitterSpec& e, double energy, int size) {
    LatticeParams q = p;
    q.size = size;
    q.validate();
    validate_emitters(q, {e});
    if (e.coupling == 0.0) throw InvalidInput("bound state requires a nonzero coupling");
    if (!inside_grid_gap(q, energy, size))
        throw InvalidInput("E_BS = " + std::to_string(energy) + " lies inside the continuum of the L = " +
                           std::to_string(size) + " lattice; no true bound state");

    const GreensField g = green_field(q, {energy, 0.0}, e.sublattice(), size);
    BoundState bs;
    bs.energy = energy;
    bs.coupling = e.coupling;
    bs.emitter = e.site;
    bs.size = size;
    bs.residue = residue(q, e, energy, size);

    double weight = 0.0;
    bs.field.resize(q.site_count());
    for (std::size_t i = 0; i < q.site_count(); ++i) {
        const SiteIndex r = SiteIndex::from_linear(i, size);
        const cplx v = e.coupling * g.at(Vec3i(r.x - e.site.x, r.y - e.site.y, r.z - e.site.z));
        bs.field[i] = v;
        weight += std::norm(v);
    }
    bs.emitter_amplitude = 1.0 / std::sqrt(1.0 + weight);
    for (cplx& c : bs.field) c *= bs.emitter_amplitude;
    return bs;
}

enum class Axis { xy, z };

inline const char* to_string(Axis a) { return a == Axis::xy ? "xy" : "z"; }

struct PowerLawFit {
    Axis direction{Axis::xy};
    Sublattice sublattice{Sublattice::A};
    double exponent{0.0};  // gamma in |C| ~ prefactor * d^-gamma
    double prefactor{0.0};
    double d_min{0.0};
    double d_max{0.0};
    double r_squared{0.0};
    int points{0};          // (distance, amplitude) pairs used
    int distances{0};       // distinct distances
    bool flagged{false};    // r^2 < 0.98
};

/// Log-log least squares of |C| against distance along the lattice axes.
/// xy pools the +-x and +-y rays; z uses +-z. Only sites on `sublattice` with
/// |C| >= 1e-12 enter.
inline PowerLawFit fit_power_law(const BoundState& bs, Axis direction, Sublattice sublattice, double d_min = 2.0,
                                 double d_max = 8.0) {
    if (d_min < 2.0 || d_max > bs.size / 2.0 - 2.0 || d_min >= d_max)
        throw InvalidInput("fit range must lie within [2, L/2 - 2] = [2, " + std::to_string(bs.size / 2.0 - 2.0) + "]");
    std::vector<Vec3i> rays;
    if (direction == Axis::xy)
        rays = {Vec3i(1, 0, 0), Vec3i(-1, 0, 0), Vec3i(0, 1, 0), Vec3i(0, -1, 0)};
    else
        rays = {Vec3i(0, 0, 1), Vec3i(0, 0, -1)};

    std::vector<double> x, y;
    int distinct = 0;
    for (int d = static_cast<int>(std::ceil(d_min)); d <= static_cast<int>(std::floor(d_max)); ++d) {
        bool any = false;
        for (const Vec3i& ray : rays) {
            const Vec3i disp = d * ray;
            if (shifted(bs.emitter.sublattice(), disp.x(), disp.y()) != sublattice) continue;
            const double a = std::abs(bs.relative(disp));
            if (a < 1e-12) continue;
            x.push_back(std::log(static_cast<double>(d)));
            y.push_back(std::log(a));
            any = true;
        }
        if (any) ++distinct;
    }
    if (x.size() < 4 || distinct < 2)
        throw InvalidInput(std::string("fewer than 4 usable points for the ") + to_string(direction) + "/" +
                           to_char(sublattice) + " fit");
    const auto f = optimize::least_squares_line(x, y);
    PowerLawFit out;
    out.direction = direction;
    out.sublattice = sublattice;
    out.exponent = -f.slope;
    out.prefactor = std::exp(f.intercept);
    out.d_min = d_min;
    out.d_max = d_max;
    out.r_squared = f.r_squared;
    out.points = static_cast<int>(x.size());
    out.distances = distinct;
    out.flagged = f.r_squared < 0.98;
    return out;
}

/// Every (direction, sublattice) combination with enough points.
inline std::vector<PowerLawFit> fit_all_power_laws(const BoundState& bs, double d_min = 2.0, double d_max = 8.0) {
    if (d_min < 2.0 || d_max > bs.size / 2.0 - 2.0 || d_min >= d_max) throw InvalidInput("fit range must lie within [2, L/2 - 2]");
    std::vector<PowerLawFit> out;
    for (Axis a : {Axis::xy, Axis::z})
        for (Sublattice s : {Sublattice::A, Sublattice::B}) {
            try {
                out.push_back(fit_power_law(bs, a, s, d_min, d_max));
            } catch (const InvalidInput&) {
            }
        }
    return out;
}

/// Exponent of one direction: mean over the sublattice fits along it. Empty when
/// no sublattice has a usable fit.
inline std::optional<double> direction_exponent(const std::vector<PowerLawFit>& fits, Axis direction) {
    double s = 0.0;
    int n = 0;
    for (const auto& f : fits)
        if (f.direction == direction) {
            s += f.exponent;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return s / n;
}

} // namespace weylqed
