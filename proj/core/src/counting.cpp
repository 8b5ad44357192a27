#include "synthwave/counting.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "synthwave/random.hpp"

namespace synthwave::counting {

void DetectorModel::validate() const {
    if (efficiency < 0.0 || efficiency > 1.0)
        throw DomainError("detector efficiency must be in [0, 1]");
    if (dark_rate < 0.0 || jitter_sigma < 0.0 || dead_time < 0.0)
        throw DomainError("detector rates and times must be >= 0");
}

void PairSource::validate() const {
    if (pair_rate < 0.0)
        throw DomainError("pair rate must be >= 0");
    if (!(profile.tau_left > 0.0) || !(profile.tau_right > 0.0))
        throw DomainError("correlation time constants must be > 0");
    for (double b : background_rates)
        if (b < 0.0) throw DomainError("background rates must be >= 0");
    for (double l : heralding_loss)
        if (l < 0.0 || l > 1.0) throw DomainError("heralding losses must be in [0, 1]");
}

void FransonSetup::validate() const {
    if (!(delta_t > 0.0))
        throw StructuralError("Franson delay imbalance must be > 0");
    if (v0 < 0.0 || v0 > 1.0)
        throw DomainError("intrinsic visibility must be in [0, 1]");
}

namespace {

constexpr double tick = TimestampStream::resolution;

int64_t to_ticks(double seconds) { return int64_t(std::llround(seconds / tick)); }

void finalize_stream(std::vector<double>& seconds, double duration, double dead_time,
                     TimestampStream& out) {
    out.duration = duration;
    out.ticks.clear();
    out.ticks.reserve(seconds.size());
    const int64_t horizon = to_ticks(duration);
    for (double t : seconds) {
        const int64_t tt = to_ticks(t);
        if (tt >= 0 && tt <= horizon) out.ticks.push_back(tt);
    }
    std::sort(out.ticks.begin(), out.ticks.end());
    if (dead_time > 0.0 && !out.ticks.empty()) {
        const int64_t dead = to_ticks(dead_time);
        std::vector<int64_t> kept;
        kept.reserve(out.ticks.size());
        int64_t last = std::numeric_limits<int64_t>::min() / 2;
        for (int64_t t : out.ticks) {
            if (t - last >= dead) {
                kept.push_back(t);
                last = t;
            }
        }
        out.ticks.swap(kept);
    }
}

void append_poisson_counts(Rng& rng, double rate, double duration, std::vector<double>& out) {
    if (rate <= 0.0) return;
    double t = rng.exponential(rate);
    while (t < duration) {
        out.push_back(t);
        t += rng.exponential(rate);
    }
}

// Detection of one photon at time t: thinning, then Gaussian jitter.
// Draw order is fixed (thin first, jitter only if kept) so streams are
// reproducible for a given seed.
bool detect(Rng& rng, const DetectorModel& det, double loss, double t, double& t_out) {
    if (!rng.bernoulli(det.efficiency * (1.0 - loss))) return false;
    t_out = det.jitter_sigma > 0.0 ? t + det.jitter_sigma * rng.normal() : t;
    return true;
}

}  // namespace

std::pair<TimestampStream, TimestampStream> simulate_streams(const PairSource& source,
                                                             const DetectorModel& detector1,
                                                             const DetectorModel& detector2,
                                                             double duration, uint64_t seed) {
    source.validate();
    detector1.validate();
    detector2.validate();
    if (!(duration > 0.0))
        throw DomainError("acquisition duration must be > 0");

    Rng rng(seed);
    std::vector<double> ch1, ch2;

    if (source.pair_rate > 0.0) {
        const double p_right =
            source.profile.tau_right / (source.profile.tau_left + source.profile.tau_right);
        double t = rng.exponential(source.pair_rate);
        while (t < duration) {
            double delay;
            if (rng.bernoulli(p_right))
                delay = rng.exponential(1.0 / source.profile.tau_right);
            else
                delay = -rng.exponential(1.0 / source.profile.tau_left);
            double t1;
            if (detect(rng, detector1, source.heralding_loss[0], t, t1)) ch1.push_back(t1);
            double t2;
            if (detect(rng, detector2, source.heralding_loss[1], t + delay, t2))
                ch2.push_back(t2);
            t += rng.exponential(source.pair_rate);
        }
    }

    append_poisson_counts(rng, detector1.dark_rate + source.background_rates[0], duration, ch1);
    append_poisson_counts(rng, detector2.dark_rate + source.background_rates[1], duration, ch2);

    std::pair<TimestampStream, TimestampStream> out;
    finalize_stream(ch1, duration, detector1.dead_time, out.first);
    finalize_stream(ch2, duration, detector2.dead_time, out.second);
    return out;
}

uint64_t CoincidenceHistogram::total() const {
    uint64_t t = 0;
    for (uint64_t c : counts) t += c;
    return t;
}

CoincidenceHistogram histogram(const TimestampStream& channel1, const TimestampStream& channel2,
                               double bin_width, double delay_range) {
    if (!(bin_width > 0.0))
        throw DomainError("bin width must be > 0");
    if (!(delay_range > 0.0))
        throw DomainError("delay range must be > 0");

    const int64_t bw = std::max<int64_t>(1, to_ticks(bin_width));
    const int64_t range = to_ticks(delay_range);
    const size_t nbins = size_t((2 * range + bw - 1) / bw);

    CoincidenceHistogram hist;
    hist.bin_width = double(bw) * tick;
    hist.delay_min = -double(range) * tick;
    hist.counts.assign(nbins, 0);
    hist.duration = std::max(channel1.duration, channel2.duration);

    const auto& t1 = channel1.ticks;
    const auto& t2 = channel2.ticks;
    size_t lo = 0;
    for (int64_t a : t1) {
        while (lo < t2.size() && t2[lo] < a - range) ++lo;
        for (size_t j = lo; j < t2.size() && t2[j] - a <= range; ++j) {
            const size_t bin = size_t((t2[j] - a + range) / bw);
            if (bin < nbins) ++hist.counts[bin];
        }
    }
    return hist;
}

namespace {

struct WindowSum {
    uint64_t counts = 0;
    size_t bins = 0;
};

WindowSum sum_window(const CoincidenceHistogram& hist, const Window& w) {
    WindowSum s;
    for (size_t i = 0; i < hist.counts.size(); ++i) {
        const double c = hist.bin_center(i);
        if (c >= w.lo && c <= w.hi) {
            s.counts += hist.counts[i];
            ++s.bins;
        }
    }
    return s;
}

}  // namespace

CarResult car(const CoincidenceHistogram& hist, const Window& peak,
              const std::vector<Window>& background) {
    const WindowSum p = sum_window(hist, peak);
    if (p.bins == 0)
        throw DomainError("peak window contains no bins");
    WindowSum b;
    for (const Window& w : background) {
        if (w.lo < peak.hi && w.hi > peak.lo)
            throw DomainError("background windows must be disjoint from the peak window");
        const WindowSum s = sum_window(hist, w);
        b.counts += s.counts;
        b.bins += s.bins;
    }
    if (b.bins == 0)
        throw DomainError("background windows contain no bins");

    CarResult out;
    out.peak_counts = double(p.counts);
    out.accidental = double(b.counts) / double(b.bins) * double(p.bins);
    if (out.accidental == 0.0)
        throw UndefinedCarError("accidental estimate is zero; CAR undefined");
    out.car = (out.peak_counts - out.accidental) / out.accidental;
    return out;
}

double car_uncertainty(double car_value, double peak_counts) {
    if (!(peak_counts > 0.0))
        throw DomainError("peak counts must be > 0 for the uncertainty estimate");
    return car_value / std::sqrt(peak_counts);
}

CoincidenceHistogram franson_simulate(const FransonSetup& setup, const PairSource& source,
                                      const DetectorModel& detector1,
                                      const DetectorModel& detector2, double duration,
                                      uint64_t seed, double bin_width, double delay_range) {
    setup.validate();
    source.validate();
    detector1.validate();
    detector2.validate();
    if (!(duration > 0.0))
        throw DomainError("acquisition duration must be > 0");

    // three resolved peaks: the imbalance must dominate the pair correlation
    // spread, the detector jitter, and the binning
    const double spread = std::max(source.profile.tau_left, source.profile.tau_right);
    const double jitter = std::max(detector1.jitter_sigma, detector2.jitter_sigma);
    if (setup.delta_t < 8.0 * std::max(spread, jitter))
        throw StructuralError("Franson delay imbalance too small to resolve three peaks");
    if (bin_width > 0.25 * setup.delta_t)
        throw StructuralError("bin width too coarse to resolve the Franson peaks");
    if (delay_range < 1.5 * setup.delta_t)
        throw StructuralError("delay range must cover both side peaks");

    Rng rng(seed);
    std::vector<double> ch1, ch2;
    const double p_center = 0.25 * (1.0 + setup.v0 * std::cos(setup.phi1 + setup.phi2));

    if (source.pair_rate > 0.0) {
        const double p_right =
            source.profile.tau_right / (source.profile.tau_left + source.profile.tau_right);
        double t = rng.exponential(source.pair_rate);
        while (t < duration) {
            double delay;
            if (rng.bernoulli(p_right))
                delay = rng.exponential(1.0 / source.profile.tau_right);
            else
                delay = -rng.exponential(1.0 / source.profile.tau_left);

            const bool kept1 = rng.bernoulli(detector1.efficiency * (1.0 - source.heralding_loss[0]));
            const bool kept2 = rng.bernoulli(detector2.efficiency * (1.0 - source.heralding_loss[1]));
            double t1 = t, t2 = t + delay;
            bool emit1 = false, emit2 = false;

            if (kept1 && kept2) {
                const double u = rng.uniform();
                if (u < 0.25) {             // long-short: channel 1 delayed
                    t1 += setup.delta_t;
                    emit1 = emit2 = true;
                } else if (u < 0.5) {       // short-long: channel 2 delayed
                    t2 += setup.delta_t;
                    emit1 = emit2 = true;
                } else if (u < 0.5 + p_center) {  // interfering ss + ll
                    if (rng.bernoulli(0.5)) {
                        t1 += setup.delta_t;
                        t2 += setup.delta_t;
                    }
                    emit1 = emit2 = true;
                }
                // else: pair exits the unmonitored ports
            } else if (kept1 || kept2) {
                // lone photon: monitored output with probability 1/2,
                // then a random arm
                if (rng.bernoulli(0.5)) {
                    const bool long_arm = rng.bernoulli(0.5);
                    if (kept1) {
                        if (long_arm) t1 += setup.delta_t;
                        emit1 = true;
                    } else {
                        if (long_arm) t2 += setup.delta_t;
                        emit2 = true;
                    }
                }
            }

            if (emit1)
                ch1.push_back(detector1.jitter_sigma > 0.0
                                  ? t1 + detector1.jitter_sigma * rng.normal()
                                  : t1);
            if (emit2)
                ch2.push_back(detector2.jitter_sigma > 0.0
                                  ? t2 + detector2.jitter_sigma * rng.normal()
                                  : t2);
            t += rng.exponential(source.pair_rate);
        }
    }

    append_poisson_counts(rng, detector1.dark_rate + source.background_rates[0], duration, ch1);
    append_poisson_counts(rng, detector2.dark_rate + source.background_rates[1], duration, ch2);

    TimestampStream s1, s2;
    finalize_stream(ch1, duration, detector1.dead_time, s1);
    finalize_stream(ch2, duration, detector2.dead_time, s2);
    return histogram(s1, s2, bin_width, delay_range);
}

VisibilityResult visibility(double car_max, double car_min, double sigma_max,
                            double sigma_min) {
    if (car_min < 0.0 || car_max < car_min)
        throw DomainError("require car_max >= car_min >= 0");
    const double sum = car_max + car_min;
    if (sum == 0.0)
        throw DomainError("visibility undefined for car_max = car_min = 0");

    VisibilityResult out;
    out.value = (car_max - car_min) / sum;
    // error propagation of (x - y)/(x + y)
    const double dx = 2.0 * car_min / (sum * sum);
    const double dy = 2.0 * car_max / (sum * sum);
    out.sigma = std::sqrt(dx * dx * sigma_max * sigma_max + dy * dy * sigma_min * sigma_min);
    out.bell_violation = out.value > 1.0 / std::sqrt(2.0);
    return out;
}

namespace {

// Window layout shared by the Franson analyses: the center peak and the two
// accidental-only gaps between the peaks.
void franson_windows(double delta_t, Window& peak, std::vector<Window>& background) {
    const double w = 0.25 * delta_t;
    peak = Window{-w, w};
    background = {Window{-delta_t + w * 1.2, -w * 1.2}, Window{w * 1.2, delta_t - w * 1.2}};
}

}  // namespace

CarResult center_peak_car(const CoincidenceHistogram& hist, double delta_t) {
    Window peak;
    std::vector<Window> background;
    franson_windows(delta_t, peak, background);
    return car(hist, peak, background);
}

double center_peak_ratio(const CoincidenceHistogram& hist, double delta_t) {
    const CarResult r = center_peak_car(hist, delta_t);
    return r.peak_counts / r.accidental;
}

namespace {

void put_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
    os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return v;
}

constexpr char stream_magic[9] = "SWTSTMP1";

}  // namespace

void write_stream(std::ostream& os, const TimestampStream& stream) {
    os.write(stream_magic, 8);
    put_u64(os, uint64_t(std::llround(TimestampStream::resolution * 1e15)));  // femtoseconds
    for (int64_t t : stream.ticks) put_u64(os, uint64_t(t));
}

TimestampStream read_stream(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != std::string(stream_magic, 8))
        throw StructuralError("not a timestamp stream file (bad magic)");
    const uint64_t res_fs = get_u64(is);
    if (res_fs != uint64_t(std::llround(TimestampStream::resolution * 1e15)))
        throw StructuralError("unsupported timestamp resolution");
    TimestampStream s;
    while (true) {
        const uint64_t v = get_u64(is);
        if (!is) break;
        s.ticks.push_back(int64_t(v));
    }
    if (!std::is_sorted(s.ticks.begin(), s.ticks.end()))
        throw StructuralError("timestamp records must be sorted");
    s.duration = s.ticks.empty() ? 0.0 : double(s.ticks.back()) * TimestampStream::resolution;
    return s;
}

}  // namespace synthwave::counting
