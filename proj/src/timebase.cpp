#include "qnet/timebase.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qnet {

Instant instant_add(Instant a, Instant b) {
    Instant r;
    if (__builtin_add_overflow(a, b, &r)) throw OverflowError("Instant addition overflow");
    return r;
}

Instant instant_sub(Instant a, Instant b) {
    Instant r;
    if (__builtin_sub_overflow(a, b, &r)) throw OverflowError("Instant subtraction overflow");
    return r;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

Rng make_rng(std::uint64_t seed) { return Rng(seed, 0); }

std::uint64_t Rng::uniform_below(std::uint64_t n) {
    // Rejection to avoid modulo bias.
    const std::uint64_t limit = n * ((~0ull) / n);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::gaussian(double mean, double sigma) {
    if (sigma == 0.0) return mean;
    if (has_cached_gauss_) {
        has_cached_gauss_ = false;
        return mean + sigma * cached_gauss_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_gauss_ = r * std::sin(a);
    has_cached_gauss_ = true;
    return mean + sigma * r * std::cos(a);
}

double Rng::exponential(double mean) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -mean * std::log(u);
}

Rng Rng::fork(std::uint64_t a, std::uint64_t b) const {
    const std::uint64_t child = mix64(mix64(seed_value_ ^ mix64(a + 1)) ^ mix64(b + 0x51ed2701));
    Rng r(child, 0);
    r.seed_value_ = child;
    return r;
}

void ClockModel::prepare_walk(double span_s) {
    if (random_walk_sigma_ps <= 0.0) return;
    const std::size_t n = static_cast<std::size_t>(std::ceil(span_s)) + 2;
    if (walk_table_.size() >= n) return;
    Rng rng = make_rng(mix64(seed ^ 0xc10c4a1cull));
    walk_table_.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        walk_table_[i] = walk_table_[i - 1] + rng.gaussian(0.0, random_walk_sigma_ps);
}

double ClockModel::walk_at(double t_s) const {
    if (random_walk_sigma_ps <= 0.0 || walk_table_.empty()) return 0.0;
    if (t_s <= 0.0) return walk_table_.front();
    const double idx = std::min(t_s, static_cast<double>(walk_table_.size() - 2));
    const std::size_t i = static_cast<std::size_t>(idx);
    const double f = idx - static_cast<double>(i);
    return walk_table_[i] * (1.0 - f) + walk_table_[i + 1] * f;
}

Instant to_local(const ClockModel& clock, Instant t_true, Rng& noise) {
    const double t_s = to_seconds(t_true);
    double shift = clock.offset_ps + clock.drift_ps_per_s * t_s;
    if (clock.random_walk_sigma_ps > 0.0) shift += clock.walk_at(t_s);
    if (clock.white_sigma_ps > 0.0) shift += noise.gaussian(0.0, clock.white_sigma_ps);
    return instant_add(t_true, static_cast<Instant>(std::llround(shift)));
}

std::vector<Instant> times_of(std::span<const TimeTag> tags) {
    std::vector<Instant> t(tags.size());
    for (std::size_t i = 0; i < tags.size(); ++i) t[i] = tags[i].t;
    return t;
}

double tdev(std::span<const double> samples, int m) {
    if (m < 1) throw std::invalid_argument("tdev: averaging multiple must be >= 1");
    const std::size_t windows = samples.size() / static_cast<std::size_t>(m);
    if (windows < 3) throw InsufficientSamples("tdev: need at least 3 averaging windows");

    std::vector<double> means(windows);
    for (std::size_t w = 0; w < windows; ++w) {
        double s = 0.0;
        for (int k = 0; k < m; ++k) s += samples[w * m + k];
        means[w] = s / m;
    }
    double acc = 0.0;
    const std::size_t terms = windows - 2;
    for (std::size_t i = 0; i < terms; ++i) {
        const double d = means[i + 2] - 2.0 * means[i + 1] + means[i];
        acc += d * d;
    }
    return std::sqrt(acc / (6.0 * static_cast<double>(terms)));
}

std::vector<TdevPoint> tdev_curve(std::span<const double> samples, double tau0_s, int max_m) {
    std::vector<TdevPoint> out;
    for (int m = 1;; m *= 2) {
        if (max_m > 0 && m > max_m) break;
        const std::size_t windows = samples.size() / static_cast<std::size_t>(m);
        if (windows < 3) break;
        out.push_back({tau0_s * m, tdev(samples, m), static_cast<int>(windows - 2)});
    }
    return out;
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - mu) * (x - mu);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace qnet
