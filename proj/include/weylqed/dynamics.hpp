// dynamics.hpp — exact single-excitation evolution of emitters coupled to the finite bath
//
// Basis: the L^3 photon modes in SiteIndex::linear order, followed by one excited
// state per emitter. H = H_B + sum_j Delta_j |e_j><e_j| + g_j (|r_j><e_j| + h.c.).
// Time evolution uses a Chebyshev expansion of exp(-i H dt) with spectral bounds
// from Gershgorin discs.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "weylqed/core.hpp"
#include "weylqed/lattice.hpp"
#include "weylqed/parallel.hpp"

namespace weylqed {

struct EmitterSpec {
    SiteIndex site;
    double detuning{0.0}; // Delta, relative to the Weyl frequency
    double coupling{0.0}; // g
    [[nodiscard]] Sublattice sublattice() const { return site.sublattice(); }
};

struct ExcitationState {
    std::vector<cplx> emitter_amplitudes;
    std::vector<cplx> photon_field;

    [[nodiscard]] double norm_squared() const {
        double s = 0.0;
        for (const cplx& c : emitter_amplitudes) s += std::norm(c);
        for (const cplx& c : photon_field) s += std::norm(c);
        return s;
    }
    /// Emitter `which` excited, bath empty.
    static ExcitationState excited(std::size_t n_sites, std::size_t n_emitters, std::size_t which) {
        if (which >= n_emitters) throw InvalidInput("excited emitter index out of range");
        ExcitationState s;
        s.emitter_amplitudes.assign(n_emitters, 0.0);
        s.photon_field.assign(n_sites, 0.0);
        s.emitter_amplitudes[which] = 1.0;
        return s;
    }
};

struct PopulationTrace {
    std::vector<double> times;
    std::vector<std::vector<double>> populations; // [emitter][sample]
    std::vector<double> photon_total;

    [[nodiscard]] std::size_t samples() const { return times.size(); }
};

inline void validate_emitters(const LatticeParams& p, const std::vector<EmitterSpec>& emitters) {
    std::set<std::size_t> used;
    for (const EmitterSpec& e : emitters) {
        if (e.site.x < 0 || e.site.y < 0 || e.site.z < 0 || e.site.x >= p.size || e.site.y >= p.size ||
            e.site.z >= p.size)
            throw InvalidInput("emitter site outside the lattice");
        if (!used.insert(e.site.linear(p.size)).second) throw InvalidInput("two emitters on one site");
        if (!std::isfinite(e.detuning) || !std::isfinite(e.coupling)) throw InvalidInput("emitter parameters must be finite");
    }
}

/// Sparse Hamiltonian of the single-excitation sector, dimension L^3 + n_emitters.
inline SparseRealMatrix build_single_excitation_hamiltonian(const LatticeParams& p,
                                                            const std::vector<EmitterSpec>& emitters) {
    p.validate();
    validate_emitters(p, emitters);
    const auto n_sites = static_cast<Eigen::Index>(p.site_count());
    const auto dim = n_sites + static_cast<Eigen::Index>(emitters.size());
    const SparseRealMatrix bath = build_real_space_hamiltonian(p);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(bath.nonZeros()) + 3 * emitters.size());
    for (Eigen::Index r = 0; r < bath.outerSize(); ++r)
        for (SparseRealMatrix::InnerIterator it(bath, r); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (std::size_t j = 0; j < emitters.size(); ++j) {
        const Eigen::Index e = n_sites + static_cast<Eigen::Index>(j);
        const auto site = static_cast<Eigen::Index>(emitters[j].site.linear(p.size));
        if (emitters[j].detuning != 0.0) t.emplace_back(e, e, emitters[j].detuning);
        if (emitters[j].coupling != 0.0) {
            t.emplace_back(e, site, emitters[j].coupling);
            t.emplace_back(site, e, emitters[j].coupling);
        }
    }
    SparseRealMatrix h(dim, dim);
    h.setFromTriplets(t.begin(), t.end());
    return h;
}

struct SpectralBounds {
    double lower{0.0};
    double upper{0.0};
};

inline SpectralBounds gershgorin_bounds(const SparseRealMatrix& h) {
    SpectralBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (Eigen::Index r = 0; r < h.outerSize(); ++r) {
        double diag = 0.0, radius = 0.0;
        for (SparseRealMatrix::InnerIterator it(h, r); it; ++it) {
            if (it.col() == r)
                diag = it.value();
            else
                radius += std::abs(it.value());
        }
        b.lower = std::min(b.lower, diag - radius);
        b.upper = std::max(b.upper, diag + radius);
    }
    return b;
}

/// exp(-i H dt) applied by a Chebyshev series in H' = (H - center) / half_width.
/// Terms are added until the Bessel coefficients fall below `tolerance` past the
/// turning point n ~ half_width * dt.
class ChebyshevPropagator {
  public:
    ChebyshevPropagator(const SparseRealMatrix& h, double dt, double tolerance = 1e-16) : h_(h), dt_(dt) {
        const SpectralBounds b = gershgorin_bounds(h);
        center_ = 0.5 * (b.upper + b.lower);
        half_width_ = 0.5 * (b.upper - b.lower) * (1.0 + 1e-6) + 1e-12;
        const double x = half_width_ * std::abs(dt);
        const int floor_terms = static_cast<int>(std::ceil(x)) + 1;
        for (int n = 0;; ++n) {
            const double jn = std::cyl_bessel_j(static_cast<double>(n), x);
            cplx c = (n == 0 ? 1.0 : 2.0) * jn * std::pow(cplx(0.0, dt >= 0 ? -1.0 : 1.0), n);
            coeffs_.push_back(c);
            if (n > floor_terms && std::abs(jn) < tolerance && std::abs(coeffs_[coeffs_.size() - 2]) < 2 * tolerance) break;
            if (n > 10 * floor_terms + 200) throw NumericalFailure("Chebyshev series failed to converge");
        }
        phase_ = std::exp(-I * center_ * dt);
    }

    [[nodiscard]] int terms() const { return static_cast<int>(coeffs_.size()); }
    [[nodiscard]] double half_width() const { return half_width_; }
    [[nodiscard]] double center() const { return center_; }

    void apply(std::vector<cplx>& v) const {
        const std::size_t n = v.size();
        std::vector<cplx> prev = v, cur(n), next(n), acc(n);
        for (std::size_t i = 0; i < n; ++i) acc[i] = coeffs_[0] * prev[i];
        scaled_product(prev, cur, nullptr);
        for (std::size_t i = 0; i < n; ++i) acc[i] += coeffs_[1] * cur[i];
        for (std::size_t k = 2; k < coeffs_.size(); ++k) {
            scaled_product(cur, next, &prev); // next = 2 H' cur - prev
            for (std::size_t i = 0; i < n; ++i) acc[i] += coeffs_[k] * next[i];
            std::swap(prev, cur);
            std::swap(cur, next);
        }
        for (std::size_t i = 0; i < n; ++i) v[i] = phase_ * acc[i];
    }

  private:
    // out = H' in, or out = 2 H' in - sub when sub is given
    void scaled_product(const std::vector<cplx>& in, std::vector<cplx>& out, const std::vector<cplx>* sub) const {
        const double inv = 1.0 / half_width_;
        parallel::for_each(static_cast<int>(h_.outerSize()), [&](int r) {
            cplx s = -center_ * in[static_cast<std::size_t>(r)];
            for (SparseRealMatrix::InnerIterator it(h_, r); it; ++it) s += it.value() * in[static_cast<std::size_t>(it.col())];
            s *= inv;
            out[static_cast<std::size_t>(r)] = sub ? 2.0 * s - (*sub)[static_cast<std::size_t>(r)] : s;
        });
    }

    const SparseRealMatrix& h_;
    double dt_;
    double center_{0.0};
    double half_width_{1.0};
    cplx phase_{1.0};
    std::vector<cplx> coeffs_;
};

inline std::vector<cplx> pack_state(const ExcitationState& s) {
    std::vector<cplx> v(s.photon_field);
    v.insert(v.end(), s.emitter_amplitudes.begin(), s.emitter_amplitudes.end());
    return v;
}

inline ExcitationState unpack_state(const std::vector<cplx>& v, std::size_t n_sites) {
    ExcitationState s;
    s.photon_field.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_sites));
    s.emitter_amplitudes.assign(v.begin() + static_cast<std::ptrdiff_t>(n_sites), v.end());
    return s;
}

struct Evolution {
    PopulationTrace trace;
    ExcitationState final_state;
    double max_norm_drift{0.0};
};

/// Exact evolution sampled every dt_out up to t_max. Throws NumericalFailure when
/// the norm drifts by more than 1e-6.
inline Evolution evolve_full(const LatticeParams& p, const std::vector<EmitterSpec>& emitters,
                             const ExcitationState& initial, double t_max, double dt_out) {
    p.validate();
    if (emitters.empty()) throw InvalidInput("at least one emitter required");
    if (!(t_max >= 0.0) || t_max * p.hopping > 1e4) throw InvalidInput("t_max must lie in [0, 1e4 / J]");
    if (!(dt_out > 0.0)) throw InvalidInput("dt_out must be positive");
    if (initial.emitter_amplitudes.size() != emitters.size() || initial.photon_field.size() != p.site_count())
        throw InvalidInput("initial state does not match the lattice and emitter list");
    const double n0 = initial.norm_squared();
    if (std::abs(n0 - 1.0) > 1e-9) throw InvalidInput("initial state must be normalized");

    const SparseRealMatrix h = build_single_excitation_hamiltonian(p, emitters);
    const ChebyshevPropagator step(h, dt_out);
    const std::size_t n_sites = p.site_count();
    const auto n_steps = static_cast<std::size_t>(std::llround(t_max / dt_out));

    Evolution out;
    out.trace.populations.assign(emitters.size(), {});
    std::vector<cplx> v = pack_state(initial);
    auto record = [&](double t) {
        out.trace.times.push_back(t);
        double emitted = 0.0;
        for (std::size_t j = 0; j < emitters.size(); ++j) {
            const double pj = std::norm(v[n_sites + j]);
            out.trace.populations[j].push_back(pj);
            emitted += pj;
        }
        double total = 0.0;
        for (const cplx& c : v) total += std::norm(c);
        out.trace.photon_total.push_back(total - emitted);
        return total;
    };
    record(0.0);
    for (std::size_t s = 1; s <= n_steps; ++s) {
        step.apply(v);
        const double norm = record(static_cast<double>(s) * dt_out);
        const double drift = std::abs(norm - n0);
        out.max_norm_drift = std::max(out.max_norm_drift, drift);
        if (drift > 1e-6) {
            std::ostringstream msg;
            msg << "norm drift " << drift << " at t = " << static_cast<double>(s) * dt_out << " (step " << s
                << ", " << step.terms() << " Chebyshev terms, spectral half-width " << step.half_width() << ")";
            throw NumericalFailure(msg.str());
        }
    }
    out.final_state = unpack_state(v, n_sites);
    return out;
}

inline PopulationTrace evolve(const LatticeParams& p, const std::vector<EmitterSpec>& emitters,
                              const ExcitationState& initial, double t_max, double dt_out) {
    return evolve_full(p, emitters, initial, t_max, dt_out).trace;
}

struct Plateau {
    double mean{0.0};
    double oscillation{0.0}; // standard deviation over the window
    int samples{0};
};

inline Plateau plateau(const PopulationTrace& t, std::size_t emitter, double from, double to) {
    Plateau out;
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < t.samples(); ++i) {
        if (t.times[i] < from - 1e-12 || t.times[i] > to + 1e-12) continue;
        const double v = t.populations.at(emitter)[i];
        s += v;
        s2 += v * v;
        ++out.samples;
    }
    if (out.samples == 0) throw InvalidInput("plateau window contains no samples");
    out.mean = s / out.samples;
    out.oscillation = std::sqrt(std::max(0.0, s2 / out.samples - out.mean * out.mean));
    return out;
}

/// Time average over the last quarter of the run.
inline Plateau plateau(const PopulationTrace& t, std::size_t emitter) {
    const double end = t.times.back();
    return plateau(t, emitter, 0.75 * end, end);
}

struct PeakInfo {
    bool found{false};
    double time{0.0};
    double height{0.0};
};

/// First local maximum whose population subsequently falls by at least
/// `prominence` before exceeding it. A maximum still rising at the end of the trace
/// is not reported.
inline PeakInfo first_maximum(const std::vector<double>& times, const std::vector<double>& v, double prominence = 0.02) {
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (!(v[i] >= v[i - 1] && v[i] > v[i + 1])) continue;
        for (std::size_t j = i + 1; j < v.size(); ++j) {
            if (v[j] > v[i]) break;
            if (v[j] < v[i] - prominence) return {true, times[i], v[i]};
        }
    }
    return {};
}

struct ExchangeResult {
    PopulationTrace trace;
    PeakInfo first_maximum; // of the initially unexcited emitter
};

/// Two A-sublattice emitters, one of them initially excited.
inline ExchangeResult two_emitter_exchange(const LatticeParams& p, const EmitterSpec& first, const EmitterSpec& second,
                                           double t_max, double dt_out = 0.05, std::size_t initially_excited = 0) {
    if (first.sublattice() != Sublattice::A || second.sublattice() != Sublattice::A)
        throw InvalidInput("two-emitter exchange requires both emitters on sublattice A");
    if (initially_excited > 1) throw InvalidInput("initially excited emitter must be 0 or 1");
    const std::vector<EmitterSpec> em{first, second};
    const auto init = ExcitationState::excited(p.site_count(), 2, initially_excited);
    ExchangeResult r;
    r.trace = evolve(p, em, init, t_max, dt_out);
    r.first_maximum = first_maximum(r.trace.times, r.trace.populations[1 - initially_excited]);
    return r;
}

/// |omega| range covered by the bath bands.
inline std::pair<double, double> band_edges(const LatticeParams& p) {
    const double lo = std::max(0.0, std::abs(p.offset) - 2.0 * p.hopping);
    const double hi = std::sqrt(8.0 * p.hopping * p.hopping + std::pow(2.0 * p.hopping + std::abs(p.offset), 2));
    return {lo, hi};
}

/// Fermi golden-rule rate Gamma = 2 pi g^2 D(Delta), zero outside the bands.
inline double markov_rate(const LatticeParams& p, const EmitterSpec& e, const DosHistogram& d) {
    const auto [lo, hi] = band_edges(p);
    const double w = std::abs(e.detuning);
    if (w < lo || w > hi) return 0.0;
    return 2.0 * pi * e.coupling * e.coupling * d.at(e.detuning);
}

inline PopulationTrace markov_prediction(const LatticeParams& p, const EmitterSpec& e, const DosHistogram& d,
                                         double t_max, double dt_out = 0.1) {
    if (!(dt_out > 0.0) || !(t_max >= 0.0)) throw InvalidInput("invalid time grid");
    const double rate = markov_rate(p, e, d);
    PopulationTrace t;
    t.populations.assign(1, {});
    const auto n = static_cast<std::size_t>(std::llround(t_max / dt_out));
    for (std::size_t i = 0; i <= n; ++i) {
        const double time = static_cast<double>(i) * dt_out;
        const double pop = std::exp(-rate * time);
        t.times.push_back(time);
        t.populations[0].push_back(pop);
        t.photon_total.push_back(1.0 - pop);
    }
    return t;
}

} // namespace weylqed
