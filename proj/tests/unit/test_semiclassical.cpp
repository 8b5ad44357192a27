#include <doctest.h>

#include <cmath>

#include "synthwave/process_algebra.hpp"
#include "synthwave/semiclassical.hpp"

using namespace synthwave;

namespace {

constexpr double tera = 2.0 * M_PI * 1e12;

Mode telecom(const std::string& label, double kappa, double kappa_ext, double delta = 0.0) {
    return Mode{label, 0, 193.0 * tera, kappa, kappa_ext, delta};
}

cme::Drive power_drive(const Mode& mode, double power_watt) {
    // |s|^2 = P / (hbar omega) photons per second
    return cme::Drive{mode.label, std::sqrt(power_watt / (hbar * mode.omega))};
}

}  // namespace

TEST_SUITE("semiclassical") {

TEST_CASE("driven linear cavity reaches the input-output photon number") {
    const double kappa = 2.0 * M_PI * 300e6;
    Mode m = telecom("a", kappa, 0.4 * kappa);
    ModeGraph graph({m});
    const double power = 2e-3;
    auto state = cme::cme_steady_state(graph, {}, {power_drive(m, power)});
    CHECK(state.converged);
    CHECK(std::norm(state.alpha[0]) ==
          doctest::Approx(intracavity_photon_number(power, m)).epsilon(1e-9));
}

TEST_CASE("transmission dips to zero at critical coupling") {
    Mode m = telecom("a", 1.0, 0.5);
    auto t = cme::transmission_spectrum(m, {0.0, 1e6, -1e6, 1e12});
    CHECK(t[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t[3] == doctest::Approx(1.0).epsilon(1e-9));
    Mode under = telecom("a", 1.0, 0.25);
    auto tu = cme::transmission_spectrum(under, {0.0});
    CHECK(tu[0] == doctest::Approx(0.25));

    // bounded on [0,1] up to critical coupling, minimum on resonance
    std::vector<double> grid;
    for (int i = -50; i <= 50; ++i) grid.push_back(0.1 * i);
    auto curve = cme::transmission_spectrum(under, grid);
    for (double v : curve) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
        CHECK(v >= tu[0] - 1e-12);
    }
}

TEST_CASE("SFG output is linear in pump power at fixed probe") {
    const double kappa = 2.0 * M_PI * 300e6;
    ModeGraph graph;
    graph.add(Mode{"pump", 0, 193.0 * tera, kappa, 0.5 * kappa, 0.0});
    graph.add(Mode{"probe", -2, 192.0 * tera, kappa, 0.5 * kappa, 0.0});
    graph.add(Mode{"sfg", -2, 385.0 * tera, 3.0 * kappa, 1.5 * kappa, 0.0});
    InteractionVertex sfg{2, {1e3, 0.0},
                          {annihilate("pump"), annihilate("probe"), create("sfg")}};

    const double hw = hbar * graph.at("pump").omega;
    std::vector<std::pair<double, double>> points;
    for (double p : {1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3}) {
        auto state = cme::cme_steady_state(
            graph, {to_effective(sfg)},
            {cme::Drive{"pump", std::sqrt(p / hw)}, cme::Drive{"probe", std::sqrt(1e-5 / hw)}});
        points.emplace_back(p, std::norm(state.alpha[2]));
    }
    auto fit = cme::power_law_fit(points);
    CHECK(fit.exponent == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("4WM signal is quadratic in pump power at fixed probe") {
    const double kappa = 2.0 * M_PI * 300e6;
    ModeGraph graph;
    graph.add(Mode{"a0", 0, 193.0 * tera, kappa, 0.5 * kappa, 0.0});
    graph.add(Mode{"am2", -2, 192.0 * tera, kappa, 0.5 * kappa, 0.0});
    graph.add(Mode{"ap2", 2, 194.0 * tera, kappa, 0.5 * kappa, 0.0});
    InteractionVertex fwm{3, {10.0, 0.0},
                          {annihilate("a0"), annihilate("a0"), create("ap2"), create("am2")}};

    const double hw = hbar * graph.at("a0").omega;
    std::vector<std::pair<double, double>> points;
    for (double p : {1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3}) {
        auto state = cme::cme_steady_state(
            graph, {to_effective(fwm)},
            {cme::Drive{"a0", std::sqrt(p / hw)}, cme::Drive{"am2", std::sqrt(1e-6 / hw)}});
        points.emplace_back(p, std::norm(state.alpha[2]));
    }
    auto fit = cme::power_law_fit(points);
    CHECK(fit.exponent == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("degenerate SHG consumes two pump photons per output photon") {
    const double kappa = 2.0 * M_PI * 300e6;
    const double g2 = 1e3;
    ModeGraph graph;
    graph.add(Mode{"pump", 0, 193.0 * tera, kappa, 0.5 * kappa, 0.0});
    graph.add(Mode{"shg", 0, 386.0 * tera, kappa, 0.5 * kappa, 0.0});
    InteractionVertex shg{2, {g2, 0.0},
                          {annihilate("pump"), annihilate("pump"), create("shg")}};

    const double hw = hbar * graph.at("pump").omega;
    std::vector<std::pair<double, double>> points;
    for (double p : {1e-4, 2e-4, 4e-4, 8e-4}) {
        auto state = cme::cme_steady_state(graph, {to_effective(shg)},
                                           {cme::Drive{"pump", std::sqrt(p / hw)}});
        points.emplace_back(p, std::norm(state.alpha[1]));

        // oracle: steady beta from d beta/dt = -kappa/2 beta - i g alpha^2
        const Complex alpha = state.alpha[0];
        const Complex beta_expect = Complex(0, -1) * g2 * alpha * alpha / (0.5 * kappa);
        CHECK(std::abs(state.alpha[1] - beta_expect) < 1e-3 * std::abs(beta_expect));
    }
    auto fit = cme::power_law_fit(points);
    CHECK(fit.exponent == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("Manley-Rowe bookkeeping balances converted fluxes") {
    const double kappa = 2.0 * M_PI * 300e6;
    ModeGraph graph;
    // lossless-internal: kappa_ext = kappa
    graph.add(Mode{"pump", 0, 193.0 * tera, kappa, kappa, 0.0});
    graph.add(Mode{"probe", -2, 192.0 * tera, kappa, kappa, 0.0});
    graph.add(Mode{"sfg", -2, 385.0 * tera, 2.0 * kappa, 2.0 * kappa, 0.0});
    InteractionVertex sfg{2, {2e3, 0.0},
                          {annihilate("pump"), annihilate("probe"), create("sfg")}};

    const double hw = hbar * graph.at("pump").omega;
    std::vector<cme::Drive> drives{cme::Drive{"pump", std::sqrt(5e-4 / hw)},
                                   cme::Drive{"probe", std::sqrt(2e-4 / hw)}};
    auto state = cme::cme_steady_state(graph, {to_effective(sfg)}, drives);
    auto ledger = cme::photon_flux_ledger(graph, {to_effective(sfg)}, drives, state);

    const double gained = ledger.converted[2];
    CHECK(gained > 0.0);
    CHECK(-ledger.converted[0] == doctest::Approx(gained).epsilon(1e-6));
    CHECK(-ledger.converted[1] == doctest::Approx(gained).epsilon(1e-6));
    // with no internal loss the converted flux leaves through the port
    CHECK(ledger.emitted_external[2] == doctest::Approx(gained).epsilon(1e-6));
    CHECK(ledger.dissipated_internal[2] == doctest::Approx(0.0));
}

TEST_CASE("steady state is invariant under a global drive phase") {
    const double kappa = 2.0 * M_PI * 300e6;
    ModeGraph graph;
    graph.add(Mode{"pump", 0, 193.0 * tera, kappa, 0.5 * kappa, 0.0});
    graph.add(Mode{"shg", 0, 386.0 * tera, kappa, 0.5 * kappa, 0.0});
    InteractionVertex shg{2, {1e3, 0.0},
                          {annihilate("pump"), annihilate("pump"), create("shg")}};
    const double hw = hbar * graph.at("pump").omega;
    const Complex s0 = std::sqrt(1e-4 / hw);

    auto base = cme::cme_steady_state(graph, {to_effective(shg)}, {cme::Drive{"pump", s0}});
    const Complex phase = std::polar(1.0, 0.813);
    auto rotated =
        cme::cme_steady_state(graph, {to_effective(shg)}, {cme::Drive{"pump", phase * s0}});
    for (size_t k = 0; k < base.alpha.size(); ++k)
        CHECK(std::abs(std::abs(rotated.alpha[k]) - std::abs(base.alpha[k])) <=
              1e-8 * (1.0 + std::abs(base.alpha[k])));
    CHECK_FALSE(base.multistable);
}

TEST_CASE("power-law fit recovers exact lines with zero uncertainty") {
    auto fit1 = cme::power_law_fit({{1.0, 2.0}, {2.0, 4.0}, {4.0, 8.0}});
    CHECK(fit1.exponent == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit1.sigma_exponent == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(fit1.prefactor == doctest::Approx(2.0).epsilon(1e-10));

    auto fit3 = cme::power_law_fit({{1.0, 1.0}, {2.0, 8.0}, {4.0, 64.0}});
    CHECK(fit3.exponent == doctest::Approx(3.0).epsilon(1e-12));

    CHECK_THROWS_AS(cme::power_law_fit({{1.0, 1.0}, {2.0, -1.0}, {4.0, 2.0}}), DomainError);
    CHECK_THROWS_AS(cme::power_law_fit({{1.0, 1.0}, {1.1, 1.1}, {1.2, 1.2}}), DomainError);
    CHECK_THROWS_AS(cme::power_law_fit({{1.0, 1.0}, {2.0, 2.0}}), DomainError);
}

TEST_CASE("sweep continues past per-point failures") {
    auto points = cme::sweep_power({1.0, 2.0, 4.0}, [](double p) {
        if (p == 2.0) throw ConvergenceError("synthetic failure", 1.0);
        return p * p;
    });
    REQUIRE(points.size() == 3);
    CHECK(points[0].ok);
    CHECK_FALSE(points[1].ok);
    CHECK(points[1].error == "synthetic failure");
    CHECK(points[2].ok);
}

}  // TEST_SUITE
