#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qnet/timebase.hpp"

namespace qnet::photonics {

/// Entangled-pair source: homogeneous Poisson pair emission with a Gaussian
/// signal-idler time split of width correlation_sigma_ps.
struct SourceParams {
    double pair_rate_hz = 0.0;
    double correlation_sigma_ps = 0.0;
    std::string label;  // "ET-EBS1" | "ET-EBS2"
};

struct DetectorParams {
    double efficiency = 1.0;
    double jitter_fwhm_ps = 0.0;
    double dark_rate_hz = 0.0;
    Instant dead_time_ps = 0;
};

enum class Arm : std::uint8_t { signal = 0, idler = 1 };

struct EmissionRecord {
    Instant t_emit;  // true time
    std::uint64_t pair_id;
    Arm arm;
};

constexpr double kFwhmToSigma = 2.3548200450309493;  // 2*sqrt(2*ln 2)

/// Emit pairs over [t_start, t_start + duration) true time. Output is sorted by
/// t_emit; every pair_id appears once per arm. Generation is chunked on fixed
/// boundaries so the OpenMP and serial paths produce identical streams.
std::vector<EmissionRecord> generate_pairs(const SourceParams& src, double duration_s, Rng& rng,
                                           Instant t_start = 0);

/// Times of one arm, sorted.
std::vector<Instant> arm_times(std::span<const EmissionRecord> emissions, Arm arm);

/// Detector model: binomial thinning by efficiency, Gaussian jitter
/// (sigma = fwhm / 2.3548) quantized to 1 ps, Poisson dark counts over the
/// window, dead-time filtering, events clipped to [window_start, window_end).
/// Returned tags are in true time, sorted, with the given identity attached.
std::vector<TimeTag> detect(std::span<const Instant> arrivals, const DetectorParams& det,
                            std::uint16_t detector_id, std::uint16_t node_id,
                            Instant window_start, Instant window_end, Rng& rng);

/// Map detected true-time tags onto a node clock; output re-sorted.
std::vector<TimeTag> stamp_local(std::span<const TimeTag> tags, const ClockModel& clock, Rng& rng);

}  // namespace qnet::photonics
