#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qnet/channel.hpp"
#include "qnet/coincidence.hpp"
#include "qnet/doqkd.hpp"
#include "qnet/photonics.hpp"
#include "qnet/qtwtt.hpp"
#include "qnet/timebase.hpp"
#include "qnet/transport.hpp"
#include "qnet/wire.hpp"

namespace qnet::netharness {

enum class TransportKind : std::uint8_t { inproc = 0, socket = 1 };

/// off: no timing correction at all (static frame alignment from the
///      configured base delay).
/// measure: two-way measurements correct the key stream per epoch but Bob's
///      clock is left untouched (common-reference operation).
/// servo: measurements additionally trim Bob's clock each epoch.
enum class QtsMode : std::uint8_t { off = 0, measure = 1, servo = 2 };

/// Detector indices into ScenarioConfig::detectors.
enum DetectorRole : std::size_t {
    kD1AliceFreq = 0,  // ET-EBS1 idler, Alice local
    kD2BobFreq = 1,    // ET-EBS1 signal after the link
    kD3BobLocal = 2,   // ET-EBS2 idler, Bob local
    kD4AliceRecv = 3,  // ET-EBS2 signal after the link
    kD5AliceTime = 4,  // ET-EBS1 idler, time basis
    kD6BobTime = 5,    // ET-EBS1 signal, time basis
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    double epoch_seconds = 5.0;
    double duration_seconds = 10.0;
    TransportKind transport = TransportKind::inproc;
    int transport_timeout_ms = 30000;
    QtsMode qts = QtsMode::servo;
    double servo_gain = 1.0;
    bool record_corrected_times = false;
    bool record_time_basis = false;
    bool record_histograms = false;

    Instant corr_half_window_ps = 3072;
    Instant corr_bin_ps = 1;
    double coincidence_window_ps = 400.0;

    photonics::SourceParams source_alice{1e4, 2.0, "ET-EBS1"};
    photonics::SourceParams source_bob{1e4, 2.0, "ET-EBS2"};
    std::array<photonics::DetectorParams, 6> detectors{};
    double fbs_alice_time_fraction = 0.5;
    double fbs_bob_time_fraction = 0.5;

    ClockModel clock_alice;
    ClockModel clock_bob;

    Instant link_base_delay_ps = 588'000'000;  // ~120 km
    channel::DriftSpec link_drift{};
    double link_transmittance = 1.0;
    double link_residual_broadening_sigma_ps = 0.0;
    double modulation_amplitude = 0.0;  // polarization count-rate modulation
    double modulation_period_s = 600.0;

    std::optional<channel::AttackParams> attack;
    int attack_from_epoch = 0;

    doqkd::EncodingParams encoding{};
    std::vector<doqkd::EncodingParams> optimization_grid;
    double qber_cap = 0.05;
    doqkd::SecurityParams security{};
    double baseline_fwhm_ps = 76.0;

    int n_epochs() const;
    void validate() const;
};

struct EpochResult {
    int epoch_index = 0;
    bool twtt_valid = false;
    bool qkd_valid = false;
    bool transport_failed = false;
    qtwtt::TwttMeasurement measurement{};
    double fit_ab_fwhm_ps = 0.0;
    double fit_ba_fwhm_ps = 0.0;
    double coincidences_ab = 0.0;  // background-subtracted in-window count
    double coincidences_ba = 0.0;
    double bob_time_singles_hz = 0.0;
    std::uint64_t pairs = 0;
    std::uint64_t key_pairs = 0;
    double qber = 0.0;
    double qber_check = 0.0;
    double rkr_bps = 0.0;
    doqkd::SecurityReport security{};
};

struct ScenarioReport {
    std::vector<EpochResult> epochs;
    std::vector<std::uint16_t> key_symbols;  // Alice's key-subset slots
    doqkd::SecurityReport pooled{};
    double total_duration_s = 0.0;

    // Optional recordings (per config flags).
    std::vector<Instant> corrected_bob_qkd_times;
    std::vector<Instant> alice_time_tags;
    std::vector<Instant> bob_time_tags_raw;  // Bob local stamps, uncorrected
    coincidence::Histogram first_epoch_hist_ab;
    coincidence::Histogram first_epoch_hist_ba;

    std::vector<qtwtt::TwttMeasurement> measurements() const;
    std::uint64_t hash() const;  // canonical content hash (FNV-1a 64)
};

/// Full two-node run: per epoch, generate/propagate/detect both directions,
/// exchange digests and fits over the transport, apply the servo, run the key
/// pipeline on the ET-EBS1 stream. Deterministic in (config, seed) regardless
/// of transport.
ScenarioReport run_scenario(const ScenarioConfig& cfg);
ScenarioReport run_scenario(const ScenarioConfig& cfg, Transport& alice_ep, Transport& bob_ep);

/// Pooled scenario-level SKR (bits/s).
double scenario_skr(const ScenarioReport& report);

/// Normalized-SKR scan over attack delays. qts_enabled selects servo mode;
/// otherwise the run is fully uncorrected. The returned curve is normalized
/// by the tau = 0 anchor, which must be present.
std::vector<doqkd::ScanPoint> attack_scan(const ScenarioConfig& base,
                                          std::span<const double> tau_list_ps, bool qts_enabled);

/// Re-run the key pipeline on recorded time-basis streams with an extra delay
/// injected into Bob's stream: the delay-injection methodology used to study
/// uncorrected attacks on baseline data.
double injected_delay_skr(const ScenarioConfig& cfg, std::span<const Instant> alice_tags,
                          std::span<const Instant> bob_tags_raw, double extra_delay_ps,
                          double duration_s, double measured_sigma_ps);

std::uint64_t fnv1a64(const void* data, std::size_t bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace qnet::netharness
