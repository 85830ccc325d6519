#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "weylqed/bound_states.hpp"
#include "weylqed/dynamics.hpp"
#include "weylqed/spin_model.hpp"

using namespace weylqed;

namespace {

LatticeParams lattice(double m, int size = 22) {
    LatticeParams p;
    p.offset = m;
    p.size = size;
    return p;
}

ExcitationState random_state(std::size_t sites, std::size_t emitters, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> n;
    ExcitationState s;
    for (std::size_t i = 0; i < emitters; ++i) s.emitter_amplitudes.emplace_back(n(rng), n(rng));
    for (std::size_t i = 0; i < sites; ++i) s.photon_field.emplace_back(n(rng), n(rng));
    const double norm = std::sqrt(s.norm_squared());
    for (auto& c : s.emitter_amplitudes) c /= norm;
    for (auto& c : s.photon_field) c /= norm;
    return s;
}

} // namespace

TEST(Hamiltonian, EmitterRowsAndValidation) {
    const auto p = lattice(0.3, 4);
    const std::vector<EmitterSpec> em{{{1, 2, 3}, 0.4, 0.2}};
    const auto h = build_single_excitation_hamiltonian(p, em);
    ASSERT_EQ(h.rows(), 65);
    const auto site = static_cast<Eigen::Index>(SiteIndex{1, 2, 3}.linear(4));
    EXPECT_EQ(h.coeff(64, 64), 0.4);
    EXPECT_EQ(h.coeff(64, site), 0.2);
    EXPECT_EQ(h.coeff(site, 64), 0.2);
    EXPECT_THROW(build_single_excitation_hamiltonian(p, {{{4, 0, 0}, 0.0, 0.1}}), InvalidInput);
    EXPECT_THROW(build_single_excitation_hamiltonian(p, {{{0, 0, 0}, 0.0, 0.1}, {{0, 0, 0}, 0.0, 0.1}}), InvalidInput);
}

TEST(Evolve, DecoupledEmitterStaysExcited) {
    const auto p = lattice(0.0, 10);
    const auto t = evolve(p, {{{0, 0, 0}, 0.3, 0.0}}, ExcitationState::excited(p.site_count(), 1, 0), 20.0, 0.5);
    for (double v : t.populations[0]) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Evolve, ChebyshevMatchesMatrixExponentialOnSixCube) {
    const auto p = lattice(0.6, 6);
    const std::vector<EmitterSpec> em{{{0, 0, 0}, 0.3, 0.4}, {{1, 2, 3}, -0.5, 0.7}};
    const ExcitationState init = random_state(p.site_count(), em.size(), 3);
    const auto h = build_single_excitation_hamiltonian(p, em);
    const std::vector<cplx> v0 = pack_state(init);
    const Eigen::VectorXcd ref = oracle::propagate(h, Eigen::Map<const Eigen::VectorXcd>(v0.data(), static_cast<Eigen::Index>(v0.size())), 5.0);

    // one long step and the sampled path must both agree
    std::vector<cplx> v = v0;
    ChebyshevPropagator(h, 5.0).apply(v);
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(v[i] - ref[static_cast<Eigen::Index>(i)]));
    EXPECT_LT(worst, 1e-8);

    const auto ev = evolve_full(p, em, init, 5.0, 0.25);
    const auto packed = pack_state(ev.final_state);
    worst = 0.0;
    for (std::size_t i = 0; i < packed.size(); ++i) worst = std::max(worst, std::abs(packed[i] - ref[static_cast<Eigen::Index>(i)]));
    EXPECT_LT(worst, 1e-8);
}

TEST(Evolve, UnitaryTraceAndBoundedPopulations) {
    const auto p = lattice(0.0, 12);
    const auto ev = evolve_full(p, {{{0, 0, 0}, 0.0, 0.5}}, ExcitationState::excited(p.site_count(), 1, 0), 30.0, 0.1);
    EXPECT_LT(ev.max_norm_drift, 1e-9 * 30.0);
    for (std::size_t i = 0; i < ev.trace.samples(); ++i) {
        const double pe = ev.trace.populations[0][i];
        EXPECT_GE(pe, 0.0);
        EXPECT_LE(pe, 1.0 + 1e-12);
        EXPECT_NEAR(pe + ev.trace.photon_total[i], 1.0, 1e-9);
    }
}

TEST(Evolve, TimeReversalRecoversInitialState) {
    const auto p = lattice(1.0, 10);
    const std::vector<EmitterSpec> em{{{0, 0, 0}, 0.2, 0.5}};
    const auto h = build_single_excitation_hamiltonian(p, em);
    const std::vector<cplx> v0 = pack_state(random_state(p.site_count(), 1, 5));
    std::vector<cplx> v = v0;
    const ChebyshevPropagator forward(h, 1.0), backward(h, -1.0);
    for (int i = 0; i < 20; ++i) forward.apply(v);
    for (int i = 0; i < 20; ++i) backward.apply(v);
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(v[i] - v0[i]));
    EXPECT_LT(worst, 1e-7);
}

TEST(Evolve, RejectsInvalidRequests) {
    const auto p = lattice(0.0, 4);
    const auto init = ExcitationState::excited(p.site_count(), 1, 0);
    EXPECT_THROW(evolve(p, {{{0, 0, 0}, 0.0, 0.5}}, init, 2e4, 0.1), InvalidInput);
    EXPECT_THROW(evolve(p, {{{0, 0, 0}, 0.0, 0.5}}, init, 1.0, 0.0), InvalidInput);
    ExcitationState bad = init;
    bad.emitter_amplitudes[0] = 2.0;
    EXPECT_THROW(evolve(p, {{{0, 0, 0}, 0.0, 0.5}}, bad, 1.0, 0.1), InvalidInput);
}

TEST(Plateau, FractionalDecayMatchesResidueSquared) {
    const auto p = lattice(0.0, 22);
    const EmitterSpec e{{0, 0, 0}, 0.0, 0.5};
    const auto t = evolve(p, {e}, ExcitationState::excited(p.site_count(), 1, 0), 40.0, 0.05);
    const Plateau pl = plateau(t, 0, 30.0, 40.0);
    EXPECT_NEAR(pl.mean, 0.886, 0.03);
    const double z = residue(p, e, 0.0, 22);
    EXPECT_NEAR(pl.mean, z * z, 0.03);
    // last-quarter default window
    EXPECT_EQ(plateau(t, 0).samples, pl.samples);
}

TEST(Plateau, FiniteSizeDifferenceBelowOnePercent) {
    // L = 22 and 26: both avoid the Weyl momenta on the commensurate grid
    const EmitterSpec e{{0, 0, 0}, 0.0, 0.5};
    const auto a = lattice(0.0, 22), b = lattice(0.0, 26);
    const double pa = plateau(evolve(a, {e}, ExcitationState::excited(a.site_count(), 1, 0), 40.0, 0.05), 0, 30.0, 40.0).mean;
    const double pb = plateau(evolve(b, {e}, ExcitationState::excited(b.site_count(), 1, 0), 40.0, 0.05), 0, 30.0, 40.0).mean;
    EXPECT_LT(std::abs(pa - pb), 0.01);
}

TEST(Evolve, WeakCouplingRecoversNoDecay) {
    const auto p = lattice(0.0, 22);
    const auto t = evolve(p, {{{0, 0, 0}, 0.0, 0.05}}, ExcitationState::excited(p.site_count(), 1, 0), 40.0, 0.5);
    EXPECT_GT(t.populations[0].back(), 0.999);
}

TEST(Exchange, SwappedInitialConditionSwapsTraces) {
    const auto p = lattice(0.0, 14);
    const EmitterSpec a{{0, 0, 0}, 0.0, 0.5}, b{{0, 0, 1}, 0.0, 0.5};
    const auto first = two_emitter_exchange(p, a, b, 20.0, 0.1, 0);
    const auto second = two_emitter_exchange(p, a, b, 20.0, 0.1, 1);
    for (std::size_t i = 0; i < first.trace.samples(); ++i) {
        EXPECT_NEAR(first.trace.populations[0][i], second.trace.populations[1][i], 1e-10);
        EXPECT_NEAR(first.trace.populations[1][i], second.trace.populations[0][i], 1e-10);
    }
    EXPECT_THROW(two_emitter_exchange(p, a, {{1, 0, 0}, 0.0, 0.5}, 1.0), InvalidInput);
}

TEST(Exchange, HalfPeriodFollowsEffectiveCoupling) {
    const auto p = lattice(0.0, 22);
    for (double g : {0.2, 0.5}) {
        const double j12 = effective_couplings(p, g, 1.0, 62).at(Vec3i(0, 0, 1), Sublattice::A);
        const double half = pi / (2.0 * std::abs(j12));
        const auto ex = two_emitter_exchange(p, {{0, 0, 0}, 0.0, g}, {{0, 0, 1}, 0.0, g}, 1.6 * half, 0.1);
        ASSERT_TRUE(ex.first_maximum.found) << "g=" << g;
        EXPECT_NEAR(ex.first_maximum.time / half, 1.0, 0.1) << "g=" << g;
    }
}

TEST(FirstMaximum, NeedsProminence) {
    const std::vector<double> t{0, 1, 2, 3, 4, 5};
    EXPECT_FALSE(first_maximum(t, {0, 0.5, 0.49, 0.6, 0.7, 0.8}).found);
    const auto pk = first_maximum(t, {0, 0.5, 0.8, 0.5, 0.2, 0.1});
    ASSERT_TRUE(pk.found);
    EXPECT_EQ(pk.time, 2.0);
    EXPECT_EQ(pk.height, 0.8);
}

TEST(Markov, NoDecayAtWeylFrequency) {
    // 62 per axis keeps the Weyl momenta off the grid, so no level sits at E = 0
    const auto p = lattice(0.0);
    const auto d = dos(p, 62, 0.02);
    const EmitterSpec e{{0, 0, 0}, 0.0, 0.5};
    EXPECT_LT(markov_rate(p, e, d), 1e-12);
    const auto trace = markov_prediction(p, e, d, 40.0);
    for (double v : trace.populations[0]) EXPECT_NEAR(v, 1.0, 1e-10);
    // outside the spectrum the golden-rule rate is zero as well
    EXPECT_EQ(markov_rate(p, {{0, 0, 0}, 10.0, 0.5}, d), 0.0);
}

TEST(Markov, RateQuadrupleWhenCouplingDoubles) {
    const auto p = lattice(0.0);
    const auto d = dos(p, 64, 0.02);
    const double a = markov_rate(p, {{0, 0, 0}, 1.5, 0.1}, d);
    const double b = markov_rate(p, {{0, 0, 0}, 1.5, 0.2}, d);
    ASSERT_GT(a, 0.0);
    EXPECT_NEAR(b / a, 4.0, 1e-12);
}

TEST(Markov, WeakCouplingTracksGoldenRuleInSmoothBand) {
    // Gamma must exceed the spacing of the levels the emitter couples to; L = 90 is the
    // smallest size tried (22, 30, 40, 60, 90) whose return time exceeds ln 2 / Gamma
    const auto p = lattice(0.0, 90);
    const EmitterSpec e{{0, 0, 0}, 1.5, 0.05};
    const auto d = dos(p, 64, 0.02);
    const double rate = markov_rate(p, e, d);
    ASSERT_GT(rate, 0.0);
    const double half_life = std::log(2.0) / rate;
    const auto exact = evolve(p, {e}, ExcitationState::excited(p.site_count(), 1, 0), 1.05 * half_life, half_life / 40);
    const auto markov = markov_prediction(p, e, d, 1.05 * half_life, half_life / 40);
    for (std::size_t i = 0; i < exact.samples() && markov.populations[0][i] >= 0.5; ++i)
        EXPECT_NEAR(exact.populations[0][i] / markov.populations[0][i], 1.0, 0.1) << "t=" << exact.times[i];
}
