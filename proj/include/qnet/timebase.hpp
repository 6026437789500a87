#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace qnet {

/// Simulation timestamp: signed picosecond count from the scenario origin.
/// int64 covers +/- 106 days at 1 ps, far beyond the 24 h requirement.
using Instant = std::int64_t;

struct OverflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Instant instant_add(Instant a, Instant b);
Instant instant_sub(Instant a, Instant b);

constexpr double kPsPerSecond = 1e12;

inline double to_seconds(Instant t) { return static_cast<double>(t) / kPsPerSecond; }

/// Deterministic random source. Wraps mt19937_64 with fixed-algorithm
/// samplers so that a given seed produces the same stream on every
/// platform (std::normal_distribution et al. are implementation-defined,
/// which would break the reproducibility contract).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t uniform_u64() { return engine_(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n);

    /// Standard Box-Muller; second value cached.
    double gaussian(double mean, double sigma);

    /// Exponential with the given mean (> 0).
    double exponential(double mean);

    bool bernoulli(double p) { return uniform() < p; }

    /// Derive an independent child stream. Deterministic in (parent seed, a, b);
    /// does not advance this stream.
    Rng fork(std::uint64_t a, std::uint64_t b = 0) const;

    std::uint64_t seed() const { return seed_value_; }

private:
    Rng(std::uint64_t seed, int) : engine_(seed), seed_value_(seed) {}
    std::mt19937_64 engine_;
    std::uint64_t seed_value_ = 0;
    double cached_gauss_ = 0.0;
    bool has_cached_gauss_ = false;

    friend Rng make_rng(std::uint64_t);
};

Rng make_rng(std::uint64_t seed);

/// splitmix64 finalizer, used for seed derivation and hash splits.
std::uint64_t mix64(std::uint64_t x);

/// Affine clock with white phase noise: local = true + offset + drift*t + N(0, sigma).
/// An optional random-walk term models slow reference wander; its sample path is
/// deterministic in (seed, walk grid) and must be materialized with prepare_walk()
/// before reads when random_walk_sigma_ps > 0.
struct ClockModel {
    double offset_ps = 0.0;
    double drift_ps_per_s = 0.0;
    double white_sigma_ps = 0.0;
    double random_walk_sigma_ps = 0.0;  // per sqrt(second), optional
    std::uint64_t seed = 0;

    ClockModel() = default;
    ClockModel(double offset, double drift, double white, double random_walk = 0.0,
               std::uint64_t clock_seed = 0)
        : offset_ps(offset),
          drift_ps_per_s(drift),
          white_sigma_ps(white),
          random_walk_sigma_ps(random_walk),
          seed(clock_seed) {}

    bool is_identity() const {
        return offset_ps == 0.0 && drift_ps_per_s == 0.0 && white_sigma_ps == 0.0 &&
               random_walk_sigma_ps == 0.0;
    }

    void prepare_walk(double span_s);
    double walk_at(double t_s) const;

private:
    std::vector<double> walk_table_;  // 1 s grid
};

/// Map a true-time instant to the clock's local timescale, quantized to 1 ps.
Instant to_local(const ClockModel& clock, Instant t_true, Rng& noise);

/// One detected photon event in some node's timescale.
struct TimeTag {
    Instant t;
    std::uint16_t detector;
    std::uint16_t node;
};

std::vector<Instant> times_of(std::span<const TimeTag> tags);

struct InsufficientSamples : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Time deviation of a time-offset series sampled at cadence tau0, for
/// averaging time m*tau0. Non-overlapping window means:
///   TDEV = sqrt( (1/6) < (xbar_{i+2} - 2 xbar_{i+1} + xbar_i)^2 > ).
/// Requires at least 3 windows.
double tdev(std::span<const double> samples, int m);

struct TdevPoint {
    double tau_s;
    double tdev_ps;
    int n_terms;  // second differences available at this averaging time
};

/// TDEV at every power-of-two multiple of tau0 that still has >= 3 windows,
/// capped at max_m (0 = no cap).
std::vector<TdevPoint> tdev_curve(std::span<const double> samples, double tau0_s, int max_m = 0);

double mean(std::span<const double> v);
double stddev(std::span<const double> v);

}  // namespace qnet
