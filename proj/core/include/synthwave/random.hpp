#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace synthwave {

/// Deterministic sampler on top of mt19937_64. The transforms are written
/// out (inverse CDF, Box-Muller) instead of using std:: distributions so
/// that a (seed, draw order) pair produces the same values on every
/// standard library implementation.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1) with 53 significant bits.
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller; the second value of each pair is
    /// cached so consecutive draws stay cheap and deterministic.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace synthwave
