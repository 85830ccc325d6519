#include <gtest/gtest.h>

#include "oracles.hpp"
#include "weylqed/bound_states.hpp"

using namespace weylqed;

namespace {

LatticeParams lattice(double m, int size = 22) {
    LatticeParams p;
    p.offset = m;
    p.size = size;
    return p;
}

// Bound state of an A emitter at its critical detuning on an L^3 lattice.
BoundState critical_state(double m, double g, int size) {
    const auto p = lattice(m, size);
    const double dc = critical_detuning(p, g, Sublattice::A, size).detuning;
    const EmitterSpec e{{0, 0, 0}, dc, g};
    const auto energy = find_bound_state_energy(p, e, size);
    if (!energy) throw NumericalFailure("no bound state");
    return bound_state_wavefunction(p, e, *energy, size);
}

double overlap_with_eigensolve(const LatticeParams& p, const EmitterSpec& e, const BoundState& bs) {
    const auto h = build_single_excitation_hamiltonian(p, {e});
    const oracle::Eigenpair ep = oracle::shift_invert(h, bs.energy + 1e-9);
    EXPECT_NEAR(ep.value, bs.energy, 1e-8);
    cplx dot = ep.vector[static_cast<Eigen::Index>(p.site_count())] * bs.emitter_amplitude;
    for (std::size_t i = 0; i < p.site_count(); ++i) dot += ep.vector[static_cast<Eigen::Index>(i)] * bs.field[i];
    return std::abs(dot);
}

} // namespace

TEST(BoundEnergy, WeylFrequencyAtZeroOffset) {
    const auto e = find_bound_state_energy(lattice(0.0), {{0, 0, 0}, 0.0, 0.5});
    ASSERT_TRUE(e.has_value());
    EXPECT_LT(std::abs(*e), 1e-14);
}

TEST(BoundEnergy, DecoupledEmitterSitsAtDetuning) {
    EXPECT_EQ(*find_bound_state_energy(lattice(1.0), {{0, 0, 0}, 0.37, 0.0}), 0.37);
}

TEST(BoundEnergy, CriticalDetuningPinsEnergyAtZero) {
    for (double m : {0.5, 1.0, 1.5, 2.0}) {
        const auto p = lattice(m);
        const auto c = critical_detuning(p, 0.5);
        const auto e = find_bound_state_energy(p, {{0, 0, 0}, c.detuning, 0.5});
        ASSERT_TRUE(e.has_value());
        EXPECT_LT(std::abs(*e), 1e-6) << "M=" << m;
        EXPECT_FALSE(c.flagged);
    }
}

TEST(BoundEnergy, NoSignChangeReportsNoBoundState) {
    // the detuning pushes the root outside the grid gap
    EXPECT_FALSE(find_bound_state_energy(lattice(0.0), {{0, 0, 0}, 2.0, 0.5}).has_value());
}

TEST(CriticalDetuning, ZeroAtZeroOffsetAndAntisymmetric) {
    EXPECT_NEAR(critical_detuning(lattice(0.0), 0.5).detuning, 0.0, 1e-12);
    for (double m : {0.5, 1.0, 1.9}) {
        const auto plus = critical_detuning(lattice(m), 0.5);
        const auto minus = critical_detuning(lattice(-m), 0.5);
        EXPECT_NEAR(plus.detuning, -minus.detuning, plus.extrapolation_error + minus.extrapolation_error + 1e-12);
        EXPECT_NE(plus.detuning, 0.0);
    }
    EXPECT_THROW(critical_detuning(lattice(2.5), 0.5), InvalidInput);
}

TEST(CriticalDetuning, MatchesShiftInvertTuningAtL20) {
    const double g = 0.5;
    const auto p = lattice(1.0, 20);
    const double predicted = critical_detuning(p, g, Sublattice::A, 20).detuning;
    auto level = [&](double delta) {
        return oracle::shift_invert(build_single_excitation_hamiltonian(p, {{{0, 0, 0}, delta, g}}), 0.0).value;
    };
    // secant on the eigenvalue closest to zero as a function of the detuning
    double x0 = 0.0, x1 = 0.05, f0 = level(x0), f1 = level(x1);
    for (int i = 0; i < 8 && std::abs(f1) > 1e-12; ++i) {
        const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = level(x1);
    }
    EXPECT_LT(std::abs(f1), 1e-10);
    EXPECT_NEAR(x1, predicted, 1e-8);
}

TEST(Residue, DecoupledAndPlateauValue) {
    EXPECT_EQ(residue(lattice(0.0), {{0, 0, 0}, 0.0, 0.0}, 0.0), 1.0);
    const double z = residue(lattice(0.0), {{0, 0, 0}, 0.0, 0.5}, 0.0);
    EXPECT_NEAR(z, 0.9412, 0.01 * 0.9412);
}

TEST(Residue, InsetIsMostlyFlat) {
    const double g = 0.5;
    double z0 = 0.0;
    for (double m : {0.0, 0.5, 1.0, 1.5, 2.0}) {
        const auto p = lattice(m);
        const EmitterSpec e{{0, 0, 0}, critical_detuning(p, g).detuning, g};
        const auto energy = find_bound_state_energy(p, e);
        ASSERT_TRUE(energy.has_value());
        const double z = residue(p, e, *energy);
        if (m == 0.0) z0 = z * z;
        EXPECT_LT(std::abs(z * z - z0), 0.05) << "M=" << m;
    }
}

TEST(Residue, PlateauBridgeToExactDynamics) {
    for (double g : {0.2, 0.5}) {
        const auto p = lattice(0.0, 22);
        const EmitterSpec e{{0, 0, 0}, 0.0, g};
        const auto t = evolve(p, {e}, ExcitationState::excited(p.site_count(), 1, 0), 40.0, 0.05);
        const double z = residue(p, e, 0.0, 22);
        EXPECT_NEAR(plateau(t, 0, 30.0, 40.0).mean, z * z, 0.03) << "g=" << g;
    }
}

TEST(Wavefunction, NormalizedAndSecularSelfConsistent) {
    for (double m : {0.0, 1.0, 2.0}) {
        const BoundState bs = critical_state(m, 0.5, 62);
        EXPECT_NEAR(bs.emitter_amplitude * bs.emitter_amplitude + bs.photon_weight(), 1.0, 1e-9);
        const auto p = lattice(m, 62);
        const double dc = critical_detuning(p, 0.5, Sublattice::A, 62).detuning;
        EXPECT_LT(std::abs(bs.energy - dc - self_energy(p, 0.5, {bs.energy, 0.0}, Sublattice::A, 62).real()), 1e-9);
        // the exact eigenvector has |C_e|^2 = Z
        EXPECT_NEAR(bs.emitter_amplitude * bs.emitter_amplitude, bs.residue, 1e-6);
    }
}

TEST(Wavefunction, EmitterWeightMatchesPlateauAmplitude) {
    const BoundState bs = critical_state(0.0, 0.5, 62);
    EXPECT_NEAR(bs.emitter_amplitude * bs.emitter_amplitude, 1.0 / (1.0 + 0.25 * 0.25), 0.01 * 0.9412);
}

TEST(Wavefunction, RejectsEnergyInsideContinuum) {
    EXPECT_THROW(bound_state_wavefunction(lattice(0.0), {{0, 0, 0}, 0.0, 0.5}, 1.5, 22), InvalidInput);
}

class WavefunctionOracle : public ::testing::TestWithParam<std::pair<int, double>> {};

TEST_P(WavefunctionOracle, OverlapsShiftInvertEigenvector) {
    const auto [size, m] = GetParam();
    const BoundState bs = critical_state(m, 0.5, size);
    const auto p = lattice(m, size);
    const EmitterSpec e{{0, 0, 0}, critical_detuning(p, 0.5, Sublattice::A, size).detuning, 0.5};
    EXPECT_GT(overlap_with_eigensolve(p, e, bs), 0.999);
}

// M = 0 at L = 20 has Weyl modes at E = 0 on the grid and no bound state; M = J does not.
INSTANTIATE_TEST_SUITE_P(Sizes, WavefunctionOracle,
                         ::testing::Values(std::pair{10, 0.0}, std::pair{14, 0.0}, std::pair{14, 1.0},
                                           std::pair{20, 1.0}));

TEST(PowerLaw, SyntheticInverseCubeIsExact) {
    BoundState bs;
    bs.size = 30;
    bs.coupling = 0.5;
    bs.field.resize(30 * 30 * 30);
    for (std::size_t i = 0; i < bs.field.size(); ++i) {
        const SiteIndex r = SiteIndex::from_linear(i, 30);
        auto image = [](int v) { return v > 15 ? v - 30 : v; };
        const double d = std::sqrt(std::pow(image(r.x), 2) + std::pow(image(r.y), 2) + std::pow(image(r.z), 2));
        bs.field[i] = d > 0 ? std::pow(d, -3.0) : 1.0;
    }
    for (Axis a : {Axis::xy, Axis::z})
        for (Sublattice s : {Sublattice::A, Sublattice::B}) {
            if (a == Axis::z && s == Sublattice::B) continue; // the z axis stays on the emitter's sublattice
            const auto f = fit_power_law(bs, a, s, 2.0, 13.0);
            EXPECT_NEAR(f.exponent, 3.0, 1e-6);
            EXPECT_NEAR(f.prefactor, 1.0, 1e-6);
            EXPECT_FALSE(f.flagged);
            EXPECT_GE(f.points, 4);
        }
    EXPECT_THROW(fit_power_law(bs, Axis::z, Sublattice::B, 2.0, 13.0), InvalidInput);
    EXPECT_THROW(fit_power_law(bs, Axis::xy, Sublattice::A, 1.0, 8.0), InvalidInput);
    EXPECT_THROW(fit_power_law(bs, Axis::xy, Sublattice::A, 2.0, 14.0), InvalidInput);
    EXPECT_THROW(fit_power_law(bs, Axis::xy, Sublattice::A, 2.0, 3.0), InvalidInput); // a single distance
}

namespace {

struct Exponents {
    double xy, z;
    std::vector<PowerLawFit> fits;
};

Exponents exponents(double m) {
    const BoundState bs = critical_state(m, 0.5, 126);
    Exponents e;
    e.fits = fit_all_power_laws(bs, 2.0, 8.0);
    e.xy = direction_exponent(e.fits, Axis::xy).value();
    e.z = direction_exponent(e.fits, Axis::z).value();
    return e;
}

} // namespace

TEST(PowerLaw, InverseSquareAndIsotropicAtZeroOffset) {
    const auto e = exponents(0.0);
    EXPECT_NEAR(e.xy, 2.0, 0.2);
    EXPECT_NEAR(e.z, 2.0, 0.2);
    EXPECT_LT(std::abs(e.xy - e.z), 0.15);
}

TEST(PowerLaw, ExponentsWithinRangeAndConfinedAtTwoJ) {
    for (double m : {1.0, 2.0})
        for (const auto& f : exponents(m).fits) {
            EXPECT_GE(f.exponent, 1.4) << "M=" << m << ' ' << to_string(f.direction) << to_char(f.sublattice);
            EXPECT_LE(f.exponent, 3.1) << "M=" << m << ' ' << to_string(f.direction) << to_char(f.sublattice);
        }
    const auto e = exponents(2.0);
    EXPECT_GE(e.z - e.xy, 0.5);
}

TEST(PowerLaw, AnisotropyGrowsWithOffset) {
    double prev = -1e9;
    for (double m : {0.0, 1.0, 2.0}) {
        const auto e = exponents(m);
        EXPECT_GE(e.z - e.xy, prev) << "M=" << m;
        prev = e.z - e.xy;
    }
}
