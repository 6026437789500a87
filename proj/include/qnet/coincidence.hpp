#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qnet/timebase.hpp"

namespace qnet::coincidence {

/// Contiguous half-open bins [edge, edge + bin_width) of time differences.
struct Histogram {
    Instant bin_width_ps = 1;
    Instant origin_ps = 0;  // left edge of bin 0
    std::vector<std::uint64_t> counts;

    std::size_t n_bins() const { return counts.size(); }
    double center_of(std::size_t k) const {
        return static_cast<double>(origin_ps) + (static_cast<double>(k) + 0.5) * static_cast<double>(bin_width_ps);
    }
    std::uint64_t total() const;
};

/// Histogram of t_b - t_a over [search_center - half_window, search_center +
/// half_window), computed by a sort-merge sliding-window pass in
/// O(n_a + n_b + matches). 2*half_window must be a multiple of bin_width.
/// OpenMP-parallel over fixed partitions; bit-identical to the serial
/// reference for any thread count.
Histogram cross_correlate(std::span<const Instant> a, std::span<const Instant> b,
                          Instant search_center, Instant half_window, Instant bin_width);

/// Single-pass serial reference with the same contract, kept for testing and
/// benchmarking against the parallel kernel.
Histogram cross_correlate_serial(std::span<const Instant> a, std::span<const Instant> b,
                                 Instant search_center, Instant half_window, Instant bin_width);

struct PeakFit {
    double center_ps = 0.0;
    double fwhm_ps = 0.0;
    double amplitude = 0.0;        // counts at peak above background
    double background = 0.0;       // counts per bin
    double center_uncertainty_ps = 0.0;
};

/// Gaussian least-squares fit of the dominant histogram peak.
/// Returns nullopt when no prominent peak exists (max bin < 5x median), which
/// upstream treats as synchronization lost / mis-centered search window.
std::optional<PeakFit> fit_gaussian_peak(const Histogram& h);

struct CoincidenceMetrics {
    double true_coincidences = 0.0;
    double accidentals_in_window = 0.0;
    double car = 0.0;  // +inf when the accidental floor is zero
};

/// window_ps is the full acceptance width centered on the fitted peak.
CoincidenceMetrics coincidence_metrics(const Histogram& h, const PeakFit& fit, double window_ps);

}  // namespace qnet::coincidence
