#include <doctest.h>

#include <algorithm>
#include <complex>

#include "synthwave/process_algebra.hpp"

using namespace synthwave;

namespace {

// Telecom-band mode family around omega0 with FSR spacing; azimuthal index m
// sets the frequency. The visible mode sits at the SFG sum frequency.
ModeGraph experiment_graph() {
    const double omega0 = 2.0 * M_PI * 193.4e12;
    const double fsr = 2.0 * M_PI * 0.75e12;
    const double kappa = 2.0 * M_PI * 300e6;
    ModeGraph g;
    for (int m : {-2, -1, 0, 1, 2})
        g.add(Mode{"a" + std::to_string(m), m, omega0 + m * fsr, kappa, 0.5 * kappa, 0.0});
    // b_{-2}: omega = omega(a0) + omega(a_{-2})
    g.add(Mode{"bm2", -2, 2.0 * omega0 - 2.0 * fsr, 3.0 * kappa, 1.5 * kappa, 0.0});
    return g;
}

// Fig. 1 style abstract graph: modes a, b, c, d with conserving frequencies,
// vertices g3 * (a b d+ d+) and g2 * (b+ d+ c).
ModeGraph figure1_graph(double kappa_b = 1.0, double delta_b = 0.0) {
    const double wd = 2.0 * M_PI * 193e12;
    const double f = 2.0 * M_PI * 1e12;
    ModeGraph g;
    g.add(Mode{"a", +2, wd + 2 * f, 1.0, 0.5, 0.0});
    g.add(Mode{"b", -2, wd - 2 * f, kappa_b, 0.5 * kappa_b, delta_b});
    g.add(Mode{"c", -2, 2 * wd - 2 * f, 1.0, 0.5, 0.0});
    g.add(Mode{"d", 0, wd, 1.0, 0.5, 0.0});
    return g;
}

InteractionVertex fig1_chi3() {
    // g3 (a b d+^2 + h.c.)
    return InteractionVertex{3, {1.0, 0.0},
                             {annihilate("a"), annihilate("b"), create("d"), create("d")}};
}

InteractionVertex fig1_chi2() {
    // g2 (b+ d+ c + h.c.)
    return InteractionVertex{2, {1.0, 0.0}, {create("b"), create("d"), annihilate("c")}};
}

std::vector<std::pair<std::string, bool>> sorted_legs(const EffectiveProcess& p) {
    std::vector<std::pair<std::string, bool>> v;
    for (const Leg& l : p.legs) v.emplace_back(l.mode, l.dagger);
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_SUITE("process_algebra") {

TEST_CASE("four-wave mixing term conserves momentum and energy") {
    ModeGraph g = experiment_graph();
    // H_4WM = g3 (a0 a0 a+2^+ a-2^+ + h.c.)
    std::vector<Leg> legs{annihilate("a0"), annihilate("a0"), create("a2"), create("a-2")};
    auto report = check_conservation(g, legs);
    CHECK(report.momentum_sum == 0);
    CHECK(report.energy_mismatch == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(report.passes);
}

TEST_CASE("single-mode identity term trivially passes") {
    ModeGraph g = experiment_graph();
    auto report = check_conservation(g, {annihilate("a0"), create("a0")});
    CHECK(report.momentum_sum == 0);
    CHECK(report.energy_mismatch == 0.0);
    CHECK(report.passes);
}

TEST_CASE("un-phase-matched pairing is excluded") {
    ModeGraph g = experiment_graph();
    // b-2^+ a+1 a0 a0: momentum 1 - (-2) = 3
    auto report = check_conservation(g, {create("bm2"), annihilate("a1"), annihilate("a0"),
                                         annihilate("a0")});
    CHECK(report.momentum_sum == 3);
    CHECK_FALSE(report.passes);
}

TEST_CASE("conservation is invariant under leg permutation") {
    ModeGraph g = experiment_graph();
    std::vector<Leg> legs{annihilate("a0"), annihilate("a0"), create("a2"), create("a-2")};
    auto base = check_conservation(g, legs);
    std::sort(legs.begin(), legs.end(), [](const Leg& a, const Leg& b) {
        return a.mode == b.mode ? a.dagger < b.dagger : a.mode > b.mode;
    });
    auto permuted = check_conservation(g, legs);
    CHECK(base.momentum_sum == permuted.momentum_sum);
    CHECK(base.energy_mismatch == doctest::Approx(permuted.energy_mismatch));
    CHECK(base.passes == permuted.passes);
}

TEST_CASE("unknown mode reference is a structural error") {
    ModeGraph g = experiment_graph();
    CHECK_THROWS_AS(check_conservation(g, {annihilate("nope")}), StructuralError);
}

TEST_CASE("five-wave synthesis with unit rates") {
    auto p = synthesize_effective({fig1_chi3(), fig1_chi2()},
                                  {Elimination{"b", {1.0, 0.0}}});
    CHECK(p.g_eff == Complex{1.0, 0.0});
    auto legs = sorted_legs(p);
    std::vector<std::pair<std::string, bool>> want{
        {"a", false}, {"c", false}, {"d", true}, {"d", true}, {"d", true}};
    CHECK(legs == want);
    CHECK(p.eliminated.size() == 1);
    CHECK(p.hermitian_pair);
}

TEST_CASE("lossy elimination gives a purely imaginary coupling") {
    const double kappa_b = 0.8;
    const Complex lambda{0.0, -0.5 * kappa_b};
    auto p = synthesize_effective({fig1_chi3(), fig1_chi2()}, {Elimination{"b", lambda}});
    // 1/(-i kappa/2) = 2i/kappa
    CHECK(p.g_eff.real() == doctest::Approx(0.0));
    CHECK(p.g_eff.imag() == doctest::Approx(2.0 / kappa_b));
}

TEST_CASE("six-wave synthesis eliminates d with two Lambda factors") {
    // one chi^(3) as written, two chi^(2) in the conjugate orientation so
    // that the d legs pair up
    const Complex g2{0.5, 0.0}, g3{0.25, 0.0};
    InteractionVertex chi3 = fig1_chi3();
    chi3.g = g3;
    InteractionVertex chi2 = fig1_chi2();
    chi2.g = g2;
    const Complex lambda{3.0, -0.5};
    auto p = synthesize_effective(
        std::vector<InteractionVertex>{chi3, chi2.adjoint(), chi2.adjoint()},
        {Elimination{"d", lambda}});
    CHECK(p.eliminated.size() == 2);
    const Complex want = g3 * std::conj(g2) * std::conj(g2) / (lambda * lambda);
    CHECK(p.g_eff.real() == doctest::Approx(want.real()));
    CHECK(p.g_eff.imag() == doctest::Approx(want.imag()));
    auto legs = sorted_legs(p);
    std::vector<std::pair<std::string, bool>> expect{
        {"a", false}, {"b", false}, {"b", false}, {"b", false}, {"c", true}, {"c", true}};
    CHECK(legs == expect);
}

TEST_CASE("dangling virtual legs and zero denominators are rejected") {
    CHECK_THROWS_AS(synthesize_effective(std::vector<InteractionVertex>{fig1_chi3(), fig1_chi2()},
                                         {Elimination{"d", {1.0, 0.0}}}),
                    SynthesisError);
    CHECK_THROWS_AS(synthesize_effective(std::vector<InteractionVertex>{fig1_chi3(), fig1_chi2()},
                                         {Elimination{"b", {0.0, 0.0}}}),
                    SingularityError);
}

TEST_CASE("sequential elimination composes associatively") {
    // chain a -> v1 -> v2 -> b contracted jointly or one mode at a time
    EffectiveProcess t1{{0.7, 0.1}, {annihilate("a"), create("v1")}, {}, {}, true};
    EffectiveProcess t2{{-0.3, 0.4}, {annihilate("v1"), create("v2")}, {}, {}, true};
    EffectiveProcess t3{{0.2, -0.9}, {annihilate("v2"), create("x")}, {}, {}, true};
    const Elimination e1{"v1", {2.0, -0.5}}, e2{"v2", {-1.0, -0.25}};

    auto joint = synthesize_effective({t1, t2, t3}, {e1, e2});
    auto first = synthesize_effective({t1, t2}, {e1});
    auto sequential = synthesize_effective({first, t3}, {e2});

    CHECK(joint.g_eff.real() == doctest::Approx(sequential.g_eff.real()).epsilon(1e-14));
    CHECK(joint.g_eff.imag() == doctest::Approx(sequential.g_eff.imag()).epsilon(1e-14));
    CHECK(sorted_legs(joint) == sorted_legs(sequential));

    auto reversed = synthesize_effective({synthesize_effective({t2, t3}, {e2}), t1}, {e1});
    CHECK(joint.g_eff.real() == doctest::Approx(reversed.g_eff.real()).epsilon(1e-14));
    CHECK(joint.g_eff.imag() == doctest::Approx(reversed.g_eff.imag()).epsilon(1e-14));
}

TEST_CASE("hermitian-partner orientation gives the conjugate coupling") {
    InteractionVertex v3 = fig1_chi3(), v2 = fig1_chi2();
    v3.g = {0.3, 0.7};
    v2.g = {-0.2, 0.5};
    const Complex lambda{1.5, -0.4};
    auto p = synthesize_effective(std::vector<InteractionVertex>{v3, v2},
                                  {Elimination{"b", lambda}});
    auto q = synthesize_effective(std::vector<InteractionVertex>{v3.adjoint(), v2.adjoint()},
                                  {Elimination{"b", std::conj(lambda)}});
    CHECK(q.g_eff.real() == doctest::Approx(std::conj(p.g_eff).real()).epsilon(1e-14));
    CHECK(q.g_eff.imag() == doctest::Approx(std::conj(p.g_eff).imag()).epsilon(1e-14));
    auto flipped = sorted_legs(p.adjoint());
    CHECK(flipped == sorted_legs(q));
}

TEST_CASE("|g_eff| decreases monotonically in |Lambda|") {
    double last = 1e300;
    for (double mag : {0.5, 1.0, 2.0, 8.0, 64.0}) {
        auto p = synthesize_effective({fig1_chi3(), fig1_chi2()},
                                      {Elimination{"b", {mag, -0.3}}});
        CHECK(std::abs(p.g_eff) < last);
        last = std::abs(p.g_eff);
    }
}

TEST_CASE("classical pump reduction scales by n^(k/2)") {
    // triple pump leg at n = 4 multiplies the coupling by 8
    EffectiveProcess p{{1.0, 0.0},
                       {create("d"), create("d"), create("d"), annihilate("a"), annihilate("c")},
                       {Elimination{"b", {1.0, 0.0}}},
                       {},
                       true};
    auto r = classical_pump_reduce(p, "d", 4.0);
    CHECK(r.g_eff == Complex{8.0, 0.0});
    CHECK(r.legs.size() == 2);

    auto zero = classical_pump_reduce(p, "d", 0.0);
    CHECK(zero.g_eff == Complex{0.0, 0.0});
}

TEST_CASE("pump-reduced 4WM becomes a two-mode squeezer with g3*n") {
    InteractionVertex h4wm{3, {2.0, 0.0},
                           {annihilate("a0"), annihilate("a0"), create("a2"), create("a-2")}};
    const double n = 7.0;
    auto r = classical_pump_reduce(h4wm, "a0", n);
    CHECK(r.g_eff.real() == doctest::Approx(2.0 * n));
    REQUIRE(r.legs.size() == 2);
    CHECK(r.legs[0].dagger);
    CHECK(r.legs[1].dagger);
}

TEST_CASE("pump reduction rejects mixed orientations and negative n") {
    EffectiveProcess p{{1.0, 0.0}, {annihilate("d"), create("d")}, {}, {}, true};
    CHECK_THROWS_AS(classical_pump_reduce(p, "d", 1.0), StructuralError);
    EffectiveProcess ok{{1.0, 0.0}, {annihilate("d"), create("a")}, {}, {}, true};
    CHECK_THROWS_AS(classical_pump_reduce(ok, "d", -1.0), DomainError);
}

TEST_CASE("intrinsic coupling estimate follows the volume scaling law") {
    CouplingReference ref{3, 123.0, 4.5e-21, 1e-16};
    CHECK(estimate_intrinsic_coupling(3, 4.5e-21, 1e-16, ref) == doctest::Approx(123.0));

    // halving V_m at fixed n = 3 doubles g3: the volume exponent is (n-1)/2 = 1
    CouplingReference chi2_ref{2, 1.0, 1.0, 1e-16};
    const double g_a = estimate_intrinsic_coupling(3, 1.0, 1e-16, chi2_ref);
    const double g_b = estimate_intrinsic_coupling(3, 1.0, 0.5e-16, chi2_ref);
    CHECK(g_b == doctest::Approx(2.0 * g_a));

    // chi^(n) ~ 1e-10 per order vs ~1e5 volume enhancement: net 1e-5 per order
    CouplingReference anchor{2, 1.0, 1e-10, 1e-10};
    const double g3 = estimate_intrinsic_coupling(3, 1e-20, 1e-10, anchor);
    CHECK(g3 == doctest::Approx(1e-5).epsilon(1e-10));

    CHECK_THROWS_AS(estimate_intrinsic_coupling(3, 1.0, -1.0, chi2_ref), DomainError);
}

TEST_CASE("figure-1 graph enumerates exactly the five-wave process") {
    ModeGraph g = figure1_graph();
    auto found = enumerate_syntheses(g, {fig1_chi3(), fig1_chi2()}, {4});
    REQUIRE(found.size() == 1);
    auto legs = sorted_legs(found[0]);
    // either orientation of d+^3 a c is the same synthesis
    std::vector<std::pair<std::string, bool>> want_a{
        {"a", false}, {"c", false}, {"d", true}, {"d", true}, {"d", true}};
    std::vector<std::pair<std::string, bool>> want_b{
        {"a", true}, {"c", true}, {"d", false}, {"d", false}, {"d", false}};
    CHECK((legs == want_a || legs == want_b));
    CHECK(check_conservation(g, found[0]).passes);
}

TEST_CASE("lone vertex yields no synthesis") {
    ModeGraph g = figure1_graph();
    CHECK(enumerate_syntheses(g, {fig1_chi3()}, {4}).empty());
}

TEST_CASE("experimental graph synthesizes the a0^3 a+2 b-2 process") {
    ModeGraph g = experiment_graph();
    InteractionVertex sfg{2, {1.0, 0.0},
                          {annihilate("a0"), annihilate("a-2"), create("bm2")}};
    InteractionVertex fwm{3, {1.0, 0.0},
                          {annihilate("a0"), annihilate("a0"), create("a2"), create("a-2")}};
    auto found = enumerate_syntheses(g, {sfg, fwm}, {4});
    REQUIRE(found.size() == 1);
    auto legs = sorted_legs(found[0]);
    std::vector<std::pair<std::string, bool>> want_a{
        {"a0", false}, {"a0", false}, {"a0", false}, {"a2", true}, {"bm2", true}};
    std::vector<std::pair<std::string, bool>> want_b{
        {"a0", true}, {"a0", true}, {"a0", true}, {"a2", false}, {"bm2", false}};
    CHECK((legs == want_a || legs == want_b));
    for (const auto& p : found) CHECK(check_conservation(g, p).passes);
}

}  // TEST_SUITE
