#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "synthwave/modes.hpp"

namespace synthwave::counting {

/**
 * Monte Carlo photon-counting layer: timestamp streams from pair statistics
 * and detector imperfections, coincidence histograms, CAR, and Franson
 * interference. Identical (parameters, seed) produce bit-identical streams.
 */

struct DetectorModel {
    double efficiency = 1.0;    // in [0, 1]
    double dark_rate = 0.0;     // [counts/s]
    double jitter_sigma = 0.0;  // Gaussian [s]
    double dead_time = 0.0;     // [s]

    void validate() const;
};

/// Two-sided exponential pair correlation profile: density ~ exp(-d/tau_right)
/// for positive delays of channel 2 relative to channel 1, exp(d/tau_left)
/// for negative. Typically taken from the fitted g2 wings.
struct CorrelationProfile {
    double tau_left = 1e-9;   // [s]
    double tau_right = 1e-9;  // [s]
};

struct PairSource {
    double pair_rate = 0.0;  // [pairs/s]
    CorrelationProfile profile;
    std::array<double, 2> background_rates{0.0, 0.0};  // flat floor per channel [counts/s]
    std::array<double, 2> heralding_loss{0.0, 0.0};    // in [0, 1]

    void validate() const;
};

/// Sorted integer-picosecond timestamps of one channel.
struct TimestampStream {
    static constexpr double resolution = 1e-12;  // [s] per tick
    std::vector<int64_t> ticks;
    double duration = 0.0;  // [s]
};

std::pair<TimestampStream, TimestampStream> simulate_streams(const PairSource& source,
                                                             const DetectorModel& detector1,
                                                             const DetectorModel& detector2,
                                                             double duration, uint64_t seed);

struct CoincidenceHistogram {
    double bin_width = 0.0;  // [s]
    double delay_min = 0.0;  // left edge of bin 0 [s]
    std::vector<uint64_t> counts;
    double duration = 0.0;   // acquisition time [s]

    double bin_center(size_t i) const { return delay_min + (double(i) + 0.5) * bin_width; }
    uint64_t total() const;
};

/// All-pairs coincidence histogram of (t2 - t1) within +-delay_range.
CoincidenceHistogram histogram(const TimestampStream& channel1, const TimestampStream& channel2,
                               double bin_width, double delay_range);

struct Window {
    double lo = 0.0, hi = 0.0;  // [s]; bins are assigned by center
};

struct CarResult {
    double car = 0.0;            // (C - A) / A
    double peak_counts = 0.0;    // C
    double accidental = 0.0;     // A, background mean scaled to the peak width
};

/// Raised when the accidental estimate is exactly zero, distinct from a
/// merely huge CAR.
class UndefinedCarError : public DomainError {
public:
    using DomainError::DomainError;
};

CarResult car(const CoincidenceHistogram& hist, const Window& peak,
              const std::vector<Window>& background);

/// sigma_CAR = CAR / sqrt(N) with N the total peak counts.
double car_uncertainty(double car_value, double peak_counts);

struct FransonSetup {
    double phi1 = 0.0;     // [rad]
    double phi2 = 0.0;     // [rad]
    double delta_t = 0.0;  // interferometer delay imbalance [s]
    double v0 = 1.0;       // intrinsic interference visibility in [0, 1]

    void validate() const;
};

/**
 * Franson coincidence histogram: side peaks at -+delta_t carry 1/4 of the
 * surviving pair flux each, the interfering center peak
 * (1/4)(1 + v0 cos(phi1 + phi2)); the remaining pairs leave through the
 * unmonitored interferometer ports. Background and detector imperfections
 * as in simulate_streams. Requires delta_t to resolve three peaks.
 */
CoincidenceHistogram franson_simulate(const FransonSetup& setup, const PairSource& source,
                                      const DetectorModel& detector1,
                                      const DetectorModel& detector2, double duration,
                                      uint64_t seed, double bin_width, double delay_range);

struct VisibilityResult {
    double value = 0.0;
    double sigma = 0.0;
    bool bell_violation = false;  // value > 1/sqrt(2)
};

/// (car_max - car_min)/(car_max + car_min), with uncertainty propagated from
/// the individual sigmas.
VisibilityResult visibility(double car_max, double car_min, double sigma_max = 0.0,
                            double sigma_min = 0.0);

/// Peak-to-accidental ratio C/A of the Franson center peak. Visibility
/// extraction uses this ratio (not the accidental-subtracted CAR): the
/// background floor then degrades the recovered visibility by the
/// signal-to-noise factor true/(true + accidental), as observed.
double center_peak_ratio(const CoincidenceHistogram& hist, double delta_t);

/// Standard CAR of the Franson center peak, side peaks excluded from the
/// background estimate.
CarResult center_peak_car(const CoincidenceHistogram& hist, double delta_t);

// Binary stream format: 8-byte magic "SWTSTMP1", 8-byte little-endian tick
// resolution in femtoseconds, then sorted 64-bit little-endian tick records.
void write_stream(std::ostream& os, const TimestampStream& stream);
TimestampStream read_stream(std::istream& is);

}  // namespace synthwave::counting
