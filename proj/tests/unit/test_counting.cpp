#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "synthwave/counting.hpp"

using namespace synthwave;
using namespace synthwave::counting;

namespace {

DetectorModel ideal_detector() { return DetectorModel{1.0, 0.0, 0.0, 0.0}; }

PairSource quiet_source(double pair_rate, double tau = 1e-9) {
    PairSource s;
    s.pair_rate = pair_rate;
    s.profile = CorrelationProfile{tau, tau};
    return s;
}

}  // namespace

TEST_SUITE("counting") {

TEST_CASE("silent source and detectors produce empty streams") {
    auto [s1, s2] = simulate_streams(quiet_source(0.0), ideal_detector(), ideal_detector(),
                                     1.0, 42);
    CHECK(s1.ticks.empty());
    CHECK(s2.ticks.empty());
}

TEST_CASE("dark counts follow the Poisson generator contract") {
    DetectorModel dark = ideal_detector();
    dark.dark_rate = 5000.0;
    const double duration = 1.0;
    auto [s1, s2] = simulate_streams(quiet_source(0.0), dark, ideal_detector(), duration, 7);
    CHECK(s2.ticks.empty());
    const double mean = dark.dark_rate * duration;
    CHECK(std::abs(double(s1.ticks.size()) - mean) < 4.0 * std::sqrt(mean));
}

TEST_CASE("streams are bit-identical for a fixed seed") {
    PairSource src = quiet_source(2e4);
    src.background_rates = {500.0, 800.0};
    DetectorModel det = ideal_detector();
    det.efficiency = 0.8;
    det.jitter_sigma = 50e-12;
    auto a = simulate_streams(src, det, det, 0.5, 1234);
    auto b = simulate_streams(src, det, det, 0.5, 1234);
    CHECK(a.first.ticks == b.first.ticks);
    CHECK(a.second.ticks == b.second.ticks);
    auto c = simulate_streams(src, det, det, 0.5, 1235);
    CHECK(a.first.ticks != c.first.ticks);
}

TEST_CASE("dead time enforces a minimum event spacing") {
    DetectorModel det = ideal_detector();
    det.dark_rate = 2e6;
    det.dead_time = 1e-6;
    auto [s1, s2] = simulate_streams(quiet_source(0.0), det, ideal_detector(), 0.05, 3);
    for (size_t i = 1; i < s1.ticks.size(); ++i)
        CHECK(s1.ticks[i] - s1.ticks[i - 1] >= 1000000);
}

TEST_CASE("single coinciding events land in the zero-delay bin") {
    TimestampStream s1, s2;
    s1.ticks = {1000000};
    s2.ticks = {1000000};
    s1.duration = s2.duration = 1.0;
    auto hist = histogram(s1, s2, 100e-12, 10e-9);
    uint64_t total = 0;
    size_t hot_bin = 0;
    for (size_t i = 0; i < hist.counts.size(); ++i)
        if (hist.counts[i]) {
            total += hist.counts[i];
            hot_bin = i;
        }
    CHECK(total == 1);
    CHECK(std::abs(hist.bin_center(hot_bin)) <= hist.bin_width);
}

TEST_CASE("independent streams give the analytic accidental floor") {
    // brute-force oracle: mean per bin = r1 r2 dt T
    const double r1 = 100e3, r2 = 100e3, duration = 2.0, bin = 10e-9;
    PairSource src = quiet_source(0.0);
    src.background_rates = {r1, r2};
    auto [s1, s2] = simulate_streams(src, ideal_detector(), ideal_detector(), duration, 99);
    auto hist = histogram(s1, s2, bin, 500e-9);
    const double mu = r1 * r2 * bin * duration;
    REQUIRE(mu > 100.0);
    for (size_t i = 0; i < hist.counts.size(); ++i)
        CHECK(std::abs(double(hist.counts[i]) - mu) < 4.0 * std::sqrt(mu));
}

TEST_CASE("paired source wings decay with the profile constants") {
    PairSource src = quiet_source(5e4);
    src.profile = CorrelationProfile{4e-9, 8e-9};
    auto [s1, s2] = simulate_streams(src, ideal_detector(), ideal_detector(), 20.0, 5);
    auto hist = histogram(s1, s2, 1e-9, 60e-9);

    // fit ln(counts) on each wing; exclude the first bins around zero
    auto wing_fit = [&](bool right) {
        std::vector<double> xs, ys;
        for (size_t i = 0; i < hist.counts.size(); ++i) {
            const double c = hist.bin_center(i);
            if (right && (c < 2e-9 || c > 30e-9)) continue;
            if (!right && (c > -2e-9 || c < -20e-9)) continue;
            if (hist.counts[i] < 30) continue;
            xs.push_back(std::abs(c));
            ys.push_back(std::log(double(hist.counts[i])));
        }
        REQUIRE(xs.size() >= 5);
        const double n = double(xs.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        return -(n * sxx - sx * sx) / (n * sxy - sx * sy);
    };
    CHECK(wing_fit(true) == doctest::Approx(8e-9).epsilon(0.10));
    CHECK(wing_fit(false) == doctest::Approx(4e-9).epsilon(0.10));
}

TEST_CASE("flat histogram has CAR near zero and C = 3A gives exactly 2") {
    PairSource src = quiet_source(0.0);
    src.background_rates = {200e3, 200e3};
    auto [s1, s2] = simulate_streams(src, ideal_detector(), ideal_detector(), 2.0, 11);
    auto hist = histogram(s1, s2, 10e-9, 400e-9);
    auto result = car(hist, Window{-50e-9, 50e-9},
                      {Window{-390e-9, -70e-9}, Window{70e-9, 390e-9}});
    CHECK(std::abs(result.car) < 0.05);

    CoincidenceHistogram synthetic;
    synthetic.bin_width = 1e-9;
    synthetic.delay_min = -5e-9;
    synthetic.counts = {10, 10, 10, 10, 30, 10, 10, 10, 10, 10};
    synthetic.duration = 1.0;
    auto exact = car(synthetic, Window{-1e-9, 0e-9}, {Window{-5e-9, -2e-9}, Window{1e-9, 5e-9}});
    CHECK(exact.car == doctest::Approx(2.0));
}

TEST_CASE("zero accidental estimate is reported as undefined CAR") {
    CoincidenceHistogram empty;
    empty.bin_width = 1e-9;
    empty.delay_min = -5e-9;
    empty.counts.assign(10, 0);
    empty.counts[5] = 4;
    empty.duration = 1.0;
    CHECK_THROWS_AS(car(empty, Window{0.0, 1e-9}, {Window{-5e-9, -1e-9}}), UndefinedCarError);
}

TEST_CASE("sigma formula and repeated-seed spread agree") {
    CHECK(car_uncertainty(10.0, 100.0) == doctest::Approx(1.0));
    CHECK(car_uncertainty(10.0, 10000.0) == doctest::Approx(0.1));
    CHECK_THROWS_AS(car_uncertainty(10.0, 0.0), DomainError);

    // empirical spread of CAR over seeds at N ~ 1e3 peak counts; the
    // background windows must pin A well or its estimation noise dominates
    PairSource src = quiet_source(2.5e4, 1e-9);
    src.background_rates = {5e5, 5e5};
    const double duration = 0.04;
    std::vector<double> cars;
    double mean_counts = 0.0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        auto [s1, s2] =
            simulate_streams(src, ideal_detector(), ideal_detector(), duration, 1000 + seed);
        auto hist = histogram(s1, s2, 1e-9, 400e-9);
        auto r = car(hist, Window{-5e-9, 5e-9}, {Window{-390e-9, -20e-9}, Window{20e-9, 390e-9}});
        cars.push_back(r.car);
        mean_counts += r.peak_counts;
    }
    mean_counts /= double(cars.size());
    const double mean = std::accumulate(cars.begin(), cars.end(), 0.0) / double(cars.size());
    double var = 0.0;
    for (double c : cars) var += (c - mean) * (c - mean);
    var /= double(cars.size() - 1);
    const double sigma_empirical = std::sqrt(var);
    const double sigma_formula = car_uncertainty(mean, mean_counts);
    CHECK(sigma_empirical == doctest::Approx(sigma_formula).epsilon(0.30));
}

TEST_CASE("halving one efficiency halves the true coincidences") {
    PairSource src = quiet_source(4e4, 1e-9);
    src.background_rates = {20e3, 20e3};
    DetectorModel full = ideal_detector(), half = ideal_detector();
    half.efficiency = 0.5;
    auto run = [&](const DetectorModel& d2) {
        auto [s1, s2] = simulate_streams(src, ideal_detector(), d2, 1.0, 77);
        auto hist = histogram(s1, s2, 1e-9, 200e-9);
        auto r = car(hist, Window{-6e-9, 6e-9}, {Window{-190e-9, -20e-9}, Window{20e-9, 190e-9}});
        return r.peak_counts - r.accidental;
    };
    const double trues_full = run(full);
    const double trues_half = run(half);
    CHECK(trues_half / trues_full == doctest::Approx(0.5).epsilon(0.08));
}

TEST_CASE("doubling acquisition leaves CAR level but shrinks its error") {
    PairSource src = quiet_source(2.5e4, 1e-9);
    src.background_rates = {5e5, 5e5};
    auto car_of = [&](double duration, uint64_t seed) {
        auto [s1, s2] = simulate_streams(src, ideal_detector(), ideal_detector(), duration, seed);
        auto hist = histogram(s1, s2, 1e-9, 400e-9);
        return car(hist, Window{-5e-9, 5e-9},
                   {Window{-390e-9, -20e-9}, Window{20e-9, 390e-9}});
    };
    auto short_run = car_of(0.05, 21);
    auto long_run = car_of(0.10, 22);
    const double sigma_short = car_uncertainty(short_run.car, short_run.peak_counts);
    CHECK(std::abs(long_run.car - short_run.car) < 4.0 * sigma_short);
    CHECK(car_uncertainty(long_run.car, long_run.peak_counts) / long_run.car ==
          doctest::Approx(sigma_short / short_run.car / std::sqrt(2.0)).epsilon(0.25));
}

TEST_CASE("franson destructive phase empties the center peak only") {
    FransonSetup setup{0.0, M_PI, 4e-9, 1.0};
    PairSource src = quiet_source(4e4, 0.2e-9);
    auto hist = franson_simulate(setup, src, ideal_detector(), ideal_detector(), 1.0, 13,
                                 100e-12, 10e-9);
    auto window_counts = [&](double center) {
        uint64_t c = 0;
        for (size_t i = 0; i < hist.counts.size(); ++i)
            if (std::abs(hist.bin_center(i) - center) < 1e-9) c += hist.counts[i];
        return double(c);
    };
    const double side_minus = window_counts(-4e-9);
    const double side_plus = window_counts(4e-9);
    const double center = window_counts(0.0);
    CHECK(center < 0.01 * side_minus);
    CHECK(std::abs(side_plus - side_minus) < 3.0 * std::sqrt(side_plus + side_minus));

    FransonSetup constructive{0.0, 0.0, 4e-9, 1.0};
    auto hist2 = franson_simulate(constructive, src, ideal_detector(), ideal_detector(), 1.0,
                                  13, 100e-12, 10e-9);
    auto window_counts2 = [&](double center_t) {
        uint64_t c = 0;
        for (size_t i = 0; i < hist2.counts.size(); ++i)
            if (std::abs(hist2.bin_center(i) - center_t) < 1e-9) c += hist2.counts[i];
        return double(c);
    };
    const double center2 = window_counts2(0.0);
    const double sides2 = 0.5 * (window_counts2(-4e-9) + window_counts2(4e-9));
    CHECK(center2 / sides2 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("too small an imbalance is a setup error") {
    FransonSetup setup{0.0, 0.0, 1e-9, 1.0};
    PairSource src = quiet_source(1e4, 0.5e-9);
    CHECK_THROWS_AS(franson_simulate(setup, src, ideal_detector(), ideal_detector(), 0.1, 1,
                                     100e-12, 10e-9),
                    StructuralError);
}

TEST_CASE("side peaks are phase independent") {
    PairSource src = quiet_source(4e4, 0.2e-9);
    auto side_counts = [&](double phase, uint64_t seed) {
        FransonSetup setup{phase, 0.0, 4e-9, 1.0};
        auto hist = franson_simulate(setup, src, ideal_detector(), ideal_detector(), 1.0, seed,
                                     100e-12, 10e-9);
        double c = 0;
        for (size_t i = 0; i < hist.counts.size(); ++i)
            if (std::abs(std::abs(hist.bin_center(i)) - 4e-9) < 1e-9)
                c += double(hist.counts[i]);
        return c;
    };
    const double at_zero = side_counts(0.0, 31);
    const double at_pi = side_counts(M_PI, 31);
    CHECK(std::abs(at_zero - at_pi) < 3.0 * std::sqrt(at_zero + at_pi));
}

TEST_CASE("visibility arithmetic and the Bell flag boundary") {
    CHECK(visibility(5.0, 5.0).value == doctest::Approx(0.0));
    auto v = visibility(3.0, 1.0);
    CHECK(v.value == doctest::Approx(0.5));
    CHECK_FALSE(v.bell_violation);

    const double bound = 1.0 / std::sqrt(2.0);
    // car_max/car_min chosen so V straddles the bound by +-1e-6
    auto above = visibility((1.0 + bound + 1e-6), (1.0 - bound - 1e-6));
    auto below = visibility((1.0 + bound - 1e-6), (1.0 - bound + 1e-6));
    CHECK(above.bell_violation);
    CHECK_FALSE(below.bell_violation);

    auto with_sigma = visibility(3.0, 1.0, 0.3, 0.1);
    CHECK(with_sigma.sigma > 0.0);
    CHECK_THROWS_AS(visibility(1.0, 2.0), DomainError);
}

TEST_CASE("visibility estimator recovers the signal-to-noise limited value") {
    // injected V0 with a flat background floor: the mean recovered
    // visibility approaches V0 * true/(true + accidental). The background
    // must dominate the singles so the accidental floor stays phase
    // independent.
    const double v0 = 0.5;
    PairSource src = quiet_source(6e4, 0.2e-9);
    src.background_rates = {2e6, 2e6};
    const double delta_t = 4e-9, duration = 0.35, bin = 100e-12, range = 8e-9;

    std::vector<double> recovered;
    double true_counts = 0.0, accidental_counts = 0.0;
    for (uint64_t seed = 0; seed < 60; ++seed) {
        FransonSetup at_max{0.0, 0.0, delta_t, v0};
        FransonSetup at_min{0.0, M_PI, delta_t, v0};
        auto h_max = franson_simulate(at_max, src, ideal_detector(), ideal_detector(), duration,
                                      2000 + seed, bin, range);
        auto h_min = franson_simulate(at_min, src, ideal_detector(), ideal_detector(), duration,
                                      2000 + seed, bin, range);
        const double r_max = center_peak_ratio(h_max, delta_t);
        const double r_min = center_peak_ratio(h_min, delta_t);
        recovered.push_back(visibility(r_max, r_min).value);

        auto c_max = center_peak_car(h_max, delta_t);
        auto c_min = center_peak_car(h_min, delta_t);
        true_counts += 0.5 * ((c_max.peak_counts - c_max.accidental) +
                              (c_min.peak_counts - c_min.accidental));
        accidental_counts += 0.5 * (c_max.accidental + c_min.accidental);
    }
    const double mean_v =
        std::accumulate(recovered.begin(), recovered.end(), 0.0) / double(recovered.size());
    const double snr_limited = v0 * true_counts / (true_counts + accidental_counts);
    CHECK(mean_v == doctest::Approx(snr_limited).epsilon(0.012));
}

TEST_CASE("timestamp files round-trip and reject bad magic") {
    TimestampStream s;
    s.ticks = {12, 9000, 123456789};
    s.duration = 1.0;
    std::stringstream buffer;
    write_stream(buffer, s);
    auto back = read_stream(buffer);
    CHECK(back.ticks == s.ticks);

    std::stringstream bad("XXXXXXXXgarbage");
    CHECK_THROWS_AS(read_stream(bad), StructuralError);
}

}  // TEST_SUITE
