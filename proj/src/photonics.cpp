#include "qnet/photonics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qnet::photonics {

namespace {

// Fixed chunk length for parallel generation. Poisson processes restart
// memorylessly, so independently seeded chunks concatenate into one valid
// process and the result does not depend on the thread count.
constexpr double kChunkSeconds = 0.25;

std::vector<EmissionRecord> generate_chunk(const SourceParams& src, double t0_s, double len_s,
                                           Rng rng) {
    std::vector<EmissionRecord> out;
    out.reserve(static_cast<std::size_t>(src.pair_rate_hz * len_s * 2.2) + 16);
    const double mean_gap_ps = kPsPerSecond / src.pair_rate_hz;
    double t_ps = t0_s * kPsPerSecond;
    const double end_ps = (t0_s + len_s) * kPsPerSecond;
    while (true) {
        t_ps += rng.exponential(mean_gap_ps);
        if (t_ps >= end_ps) break;
        const double split = src.correlation_sigma_ps > 0.0
                                 ? rng.gaussian(0.0, src.correlation_sigma_ps)
                                 : 0.0;
        const Instant t_signal = static_cast<Instant>(std::llround(t_ps + 0.5 * split));
        const Instant t_idler = static_cast<Instant>(std::llround(t_ps - 0.5 * split));
        out.push_back({t_signal, 0, Arm::signal});
        out.push_back({t_idler, 0, Arm::idler});
    }
    return out;
}

}  // namespace

std::vector<EmissionRecord> generate_pairs(const SourceParams& src, double duration_s, Rng& rng,
                                           Instant t_start) {
    if (src.pair_rate_hz <= 0.0) throw std::invalid_argument("generate_pairs: pair_rate must be > 0");
    if (duration_s <= 0.0) throw std::invalid_argument("generate_pairs: duration must be > 0");

    const double start_s = to_seconds(t_start);
    const int n_chunks = std::max(1, static_cast<int>(std::ceil(duration_s / kChunkSeconds)));
    std::vector<std::vector<EmissionRecord>> chunks(n_chunks);

#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < n_chunks; ++c) {
        const double c0 = c * kChunkSeconds;
        const double len = std::min(kChunkSeconds, duration_s - c0);
        chunks[c] = generate_chunk(src, start_s + c0, len, rng.fork(0x9a1f, c));
    }

    std::size_t total = 0;
    for (const auto& ch : chunks) total += ch.size();
    std::vector<EmissionRecord> out;
    out.reserve(total);
    std::uint64_t next_id = 0;
    for (auto& ch : chunks) {
        // generate_chunk emits the two arms of a pair adjacently.
        for (std::size_t i = 0; i + 1 < ch.size(); i += 2) {
            ch[i].pair_id = next_id;
            ch[i + 1].pair_id = next_id;
            ++next_id;
        }
        out.insert(out.end(), ch.begin(), ch.end());
    }

    // Chunks are time-ordered; pairs within a chunk may interleave slightly
    // when the split exceeds the emission gap.
    std::stable_sort(out.begin(), out.end(),
                     [](const EmissionRecord& a, const EmissionRecord& b) { return a.t_emit < b.t_emit; });
    return out;
}

std::vector<Instant> arm_times(std::span<const EmissionRecord> emissions, Arm arm) {
    std::vector<Instant> out;
    out.reserve(emissions.size() / 2 + 1);
    for (const auto& e : emissions)
        if (e.arm == arm) out.push_back(e.t_emit);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<TimeTag> detect(std::span<const Instant> arrivals, const DetectorParams& det,
                            std::uint16_t detector_id, std::uint16_t node_id,
                            Instant window_start, Instant window_end, Rng& rng) {
    if (det.efficiency < 0.0 || det.efficiency > 1.0)
        throw std::invalid_argument("detect: efficiency outside [0,1]");
    if (!std::is_sorted(arrivals.begin(), arrivals.end()))
        throw std::invalid_argument("detect: arrivals must be sorted");

    const double jitter_sigma = det.jitter_fwhm_ps / kFwhmToSigma;
    std::vector<Instant> events;
    events.reserve(arrivals.size() + 64);

    Rng thin_rng = rng.fork(0xde7ec7, 1);
    Rng jitter_rng = rng.fork(0xde7ec7, 2);
    Rng dark_rng = rng.fork(0xde7ec7, 3);

    for (Instant t : arrivals) {
        if (det.efficiency < 1.0 && !thin_rng.bernoulli(det.efficiency)) continue;
        Instant out = t;
        if (jitter_sigma > 0.0)
            out = instant_add(t, static_cast<Instant>(std::llround(jitter_rng.gaussian(0.0, jitter_sigma))));
        if (out < window_start || out >= window_end) continue;
        events.push_back(out);
    }

    if (det.dark_rate_hz > 0.0) {
        const double mean_gap_ps = kPsPerSecond / det.dark_rate_hz;
        double t = static_cast<double>(window_start);
        while (true) {
            t += dark_rng.exponential(mean_gap_ps);
            if (t >= static_cast<double>(window_end)) break;
            events.push_back(static_cast<Instant>(std::llround(t)));
        }
    }

    std::sort(events.begin(), events.end());

    std::vector<TimeTag> out;
    out.reserve(events.size());
    Instant last_accepted = std::numeric_limits<Instant>::min();
    for (Instant t : events) {
        if (det.dead_time_ps > 0 && !out.empty() && t - last_accepted < det.dead_time_ps) continue;
        out.push_back({t, detector_id, node_id});
        last_accepted = t;
    }
    return out;
}

std::vector<TimeTag> stamp_local(std::span<const TimeTag> tags, const ClockModel& clock, Rng& rng) {
    std::vector<TimeTag> out(tags.begin(), tags.end());
    if (clock.is_identity()) return out;
    for (auto& tag : out) tag.t = to_local(clock, tag.t, rng);
    if (clock.white_sigma_ps > 0.0)
        std::sort(out.begin(), out.end(), [](const TimeTag& a, const TimeTag& b) { return a.t < b.t; });
    return out;
}

}  // namespace qnet::photonics
