#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qnet/timebase.hpp"

namespace qnet::doqkd {

/// Temporal grid: a frame holds 2^D slots (the key alphabet), a slot holds I
/// bins (the sifting check), a bin is bin_width_ps wide.
struct EncodingParams {
    int dimension_exp = 6;  // D
    int bins_per_slot = 3;  // I
    Instant bin_width_ps = 110;
    Instant frame_origin_ps = 0;

    std::int64_t slots_per_frame() const { return std::int64_t{1} << dimension_exp; }
    Instant slot_width_ps() const { return bins_per_slot * bin_width_ps; }
    Instant frame_length_ps() const { return slots_per_frame() * slot_width_ps(); }
    void validate() const;
};

struct SiftedEvent {
    std::int64_t frame_no;
    std::uint32_t slot_no;
    std::uint32_t bin_no;
};

/// Frame/slot/bin indices by half-open interval arithmetic relative to the
/// frame origin; a tag exactly on an edge belongs to the upper interval.
/// Throws on tags before the origin.
std::vector<SiftedEvent> assign_bins(std::span<const Instant> tags, const EncodingParams& enc);
SiftedEvent assign_one(Instant t, const EncodingParams& enc);

/// Aligned sifted symbol pairs. is_check marks pairs disclosed for security
/// analysis; the rest are key material.
struct KeyBatch {
    std::vector<std::uint16_t> symbols_a;
    std::vector<std::uint16_t> symbols_b;
    std::vector<std::uint8_t> is_check;
    std::vector<std::int64_t> frames;
    double duration_s = 0.0;
    double qber = 0.0;
    double rkr_bps = 0.0;

    std::size_t pair_count() const { return symbols_a.size(); }
};

/// Bin-sifting: keep frames with exactly one event per side, pair frames
/// present on both sides with matching bin numbers, key symbols are the slot
/// numbers. Only (frame_no, bin_no) is ever announced.
KeyBatch sift(std::span<const SiftedEvent> alice, std::span<const SiftedEvent> bob);

/// Deterministic per-frame key/check split (key_fraction of frames go to key).
void split_batch(KeyBatch& batch, double key_fraction, std::uint64_t salt);

struct KeyMetrics {
    double rkr_bps = 0.0;
    double qber = 0.0;
};

/// rkr = D * pairs / duration, qber = slot mismatch fraction over the batch.
KeyMetrics key_metrics(KeyBatch& batch, double duration_s, int dimension_exp);

/// Square joint slot-count matrix for the mutual-information estimate.
struct JointHistogram {
    explicit JointHistogram(std::size_t dim) : dim_(dim), counts_(dim * dim, 0) {}
    void add(std::size_t a, std::size_t b) { ++counts_[a * dim_ + b]; }
    std::uint64_t at(std::size_t a, std::size_t b) const { return counts_[a * dim_ + b]; }
    std::size_t dim() const { return dim_; }
    std::uint64_t total() const;

private:
    std::size_t dim_;
    std::vector<std::uint64_t> counts_;
};

/// Plug-in Shannon mutual information (bits) of the empirical joint
/// distribution.
double mutual_information(const JointHistogram& joint);

/// Epsilon budget and analysis knobs. chi_of_ratio maps the excess variance
/// ratio (measured/baseline - 1, clamped at 0) to a Holevo bound; the default
/// is the one-mode Gaussian-channel expression with a calibration scale.
struct SecurityParams {
    double beta = 0.9;
    double eps_ver = 1e-9;
    double eps_pa = 1e-9;
    double eps_pe_total = 1e-9;  // n_PE * eps_PE
    double eps_bar = 1e-9;
    double key_fraction = 0.7;
    double chi_scale = 1.8;
    std::function<double(double)> chi_of_ratio;  // optional override
};

/// Reference vs measured correlation widths feeding the excess-noise model.
struct BaselineWidths {
    double baseline_sigma_ps = 0.0;
    double measured_sigma_ps = 0.0;
};

struct SecurityReport {
    double i_ab = 0.0;       // bits / coincidence
    double chi_ae = 0.0;     // bits / coincidence
    double delta_fk = 0.0;   // bits / coincidence
    double delta_i = 0.0;    // bits / coincidence, clamped at 0
    double skr_bps = 0.0;
    std::uint64_t n = 0;     // coincidences entering the finite-size penalty
    bool model_violation = false;  // measured variance below baseline
};

/// Holevo bound of a one-mode Gaussian channel with mean excess photon
/// number nbar: (nbar+1)log2(nbar+1) - nbar log2 nbar.
double holevo_g(double nbar);

/// Default excess-noise model: chi = g(chi_scale * max(0, ratio)).
double gaussian_excess_chi(double excess_ratio, double chi_scale);

/// Finite-size penalty (bits per coincidence) for n coincidences.
double finite_size_penalty(std::uint64_t n, double eps_bar, double eps_pa);

/// Full per-batch analysis: I(A;B) from the disclosed check subset,
/// chi(A;E) from the width ratio, delta_i and SKR per the report invariants.
/// Requires >= 1000 pairs.
SecurityReport security_analysis(const KeyBatch& batch, const SecurityParams& params,
                                 const BaselineWidths& widths, int dimension_exp);

struct CandidateResult {
    EncodingParams enc;
    double qber = 0.0;
    double rkr_bps = 0.0;
    double skr_bps = 0.0;
    std::uint64_t pairs = 0;
};

struct OptimizationResult {
    EncodingParams best;
    bool cap_violated = false;  // no candidate met the QBER cap
    std::vector<CandidateResult> table;
};

/// Grid search over encoding candidates on recorded sample streams: returns
/// the SKR-maximizing candidate with qber <= cap, ties broken toward smaller
/// D, then I, then bin width. When every candidate violates the cap, returns
/// the best-QBER candidate flagged.
OptimizationResult optimize_encoding(std::span<const EncodingParams> candidates, double qber_cap,
                                     std::span<const Instant> alice_tags,
                                     std::span<const Instant> bob_tags, double duration_s,
                                     const SecurityParams& params, const BaselineWidths& widths,
                                     std::uint64_t split_salt);

struct ScanPoint {
    double tau_eve_ps = 0.0;
    double skr_bps = 0.0;
    double normalized_skr = 0.0;
};

/// Normalize a scan by its tau_eve = 0 anchor. Throws when the anchor is
/// missing or its SKR is not positive.
std::vector<ScanPoint> normalize_scan(std::span<const double> tau_list,
                                      std::span<const double> skr_values);

}  // namespace qnet::doqkd
