#include "qnet/netharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace qnet::netharness {

int ScenarioConfig::n_epochs() const {
    return static_cast<int>(std::floor(duration_seconds / epoch_seconds + 1e-9));
}

void ScenarioConfig::validate() const {
    if (epoch_seconds <= 0.0) throw std::invalid_argument("config: epoch_seconds must be > 0");
    if (n_epochs() < 2) throw std::invalid_argument("config: total duration must cover >= 2 epochs");
    if (source_alice.pair_rate_hz <= 0.0 || source_bob.pair_rate_hz <= 0.0)
        throw std::invalid_argument("config: source pair rates must be > 0");
    if (source_alice.correlation_sigma_ps < 0.0 || source_bob.correlation_sigma_ps < 0.0)
        throw std::invalid_argument("config: correlation sigma must be >= 0");
    for (const auto& d : detectors) {
        if (d.efficiency < 0.0 || d.efficiency > 1.0)
            throw std::invalid_argument("config: detector efficiency outside [0,1]");
        if (d.jitter_fwhm_ps < 0.0 || d.dark_rate_hz < 0.0 || d.dead_time_ps < 0)
            throw std::invalid_argument("config: detector noise parameters must be >= 0");
    }
    if (fbs_alice_time_fraction < 0.0 || fbs_alice_time_fraction > 1.0 ||
        fbs_bob_time_fraction < 0.0 || fbs_bob_time_fraction > 1.0)
        throw std::invalid_argument("config: beam-splitter fractions outside [0,1]");
    if (link_transmittance < 0.0 || link_transmittance > 1.0)
        throw std::invalid_argument("config: link transmittance outside [0,1]");
    if (link_base_delay_ps < 0) throw std::invalid_argument("config: link base delay must be >= 0");
    if (attack && attack->tau_eve_ps < 0.0)
        throw std::invalid_argument("config: attack delay must be >= 0");
    if (modulation_amplitude < 0.0 || modulation_amplitude > 1.0)
        throw std::invalid_argument("config: modulation amplitude outside [0,1]");
    encoding.validate();
    if (qber_cap <= 0.0 || qber_cap > 1.0) throw std::invalid_argument("config: qber_cap outside (0,1]");
    if (security.key_fraction <= 0.0 || security.key_fraction > 1.0)
        throw std::invalid_argument("config: key_fraction outside (0,1]");
    if (security.beta <= 0.0 || security.beta > 1.0)
        throw std::invalid_argument("config: beta outside (0,1]");
    if (servo_gain <= 0.0 || servo_gain > 1.0)
        throw std::invalid_argument("config: servo gain outside (0,1]");
}

std::uint64_t fnv1a64(const void* data, std::size_t bytes, std::uint64_t seed) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

using photonics::DetectorParams;

struct WorldEpoch {
    // Sorted local timestamps per detector; Bob's carry the servo trim.
    std::vector<Instant> d1, d4, d5;     // Alice
    std::vector<Instant> d2, d3, d6;     // Bob
    std::size_t d6_raw_count = 0;
};

std::pair<std::vector<Instant>, std::vector<Instant>> split_fbs(std::span<const Instant> times,
                                                                double first_fraction, Rng rng) {
    std::vector<Instant> first, second;
    first.reserve(times.size());
    second.reserve(times.size());
    for (Instant t : times) {
        if (rng.bernoulli(first_fraction))
            first.push_back(t);
        else
            second.push_back(t);
    }
    return {std::move(first), std::move(second)};
}

std::vector<Instant> stamp_and_trim(std::span<const TimeTag> tags, const ClockModel& clock,
                                    Instant trim_ps, Rng rng) {
    auto stamped = photonics::stamp_local(tags, clock, rng);
    std::vector<Instant> out;
    out.reserve(stamped.size());
    for (const auto& tag : stamped) out.push_back(tag.t - trim_ps);
    return out;
}

WorldEpoch simulate_epoch(const ScenarioConfig& cfg, const channel::LinkState& link,
                          const ClockModel& clock_a, const ClockModel& clock_b, int epoch,
                          Instant trim_ps, const Rng& root) {
    const Instant t0 = static_cast<Instant>(std::llround(epoch * cfg.epoch_seconds * kPsPerSecond));
    const Instant t1 =
        static_cast<Instant>(std::llround((epoch + 1) * cfg.epoch_seconds * kPsPerSecond));
    const Instant base = cfg.link_base_delay_ps;
    const Rng ep = root.fork(0xE9, static_cast<std::uint64_t>(epoch));

    const std::optional<channel::AttackParams> attack =
        (cfg.attack && epoch >= cfg.attack_from_epoch) ? cfg.attack : std::nullopt;

    // Polarization-drift count-rate modulation on the fiber-transmitted arms.
    double mod = 1.0;
    if (cfg.modulation_amplitude > 0.0) {
        const double phase = 2.0 * M_PI * (epoch * cfg.epoch_seconds) / cfg.modulation_period_s;
        mod = 1.0 - 0.5 * cfg.modulation_amplitude * (1.0 - std::cos(phase));
    }
    auto modulated = [&](const DetectorParams& d) {
        DetectorParams m = d;
        m.efficiency = std::clamp(d.efficiency * mod, 0.0, 1.0);
        return m;
    };

    WorldEpoch w;

    {  // ET-EBS1: idler local at Alice, signal over the link to Bob
        Rng gen = ep.fork(1);
        const auto pairs = photonics::generate_pairs(cfg.source_alice, cfg.epoch_seconds, gen, t0);
        const auto idler = photonics::arm_times(pairs, photonics::Arm::idler);
        const auto signal = photonics::arm_times(pairs, photonics::Arm::signal);

        auto [to_d5, to_d1] = split_fbs(idler, cfg.fbs_alice_time_fraction, ep.fork(2));
        Rng det_rng1 = ep.fork(3), det_rng5 = ep.fork(4);
        const auto d1_tags = photonics::detect(to_d1, cfg.detectors[kD1AliceFreq], 1, 0, t0, t1, det_rng1);
        const auto d5_tags = photonics::detect(to_d5, cfg.detectors[kD5AliceTime], 5, 0, t0, t1, det_rng5);
        w.d1 = stamp_and_trim(d1_tags, clock_a, 0, ep.fork(5));
        w.d5 = stamp_and_trim(d5_tags, clock_a, 0, ep.fork(6));

        Rng link_rng = ep.fork(7);
        const auto arrivals = channel::propagate(signal, link, attack, channel::Direction::forward, link_rng);
        auto [to_d6, to_d2] = split_fbs(arrivals, cfg.fbs_bob_time_fraction, ep.fork(8));
        Rng det_rng2 = ep.fork(9), det_rng6 = ep.fork(10);
        const auto d2_tags = photonics::detect(to_d2, modulated(cfg.detectors[kD2BobFreq]), 2, 1,
                                               t0 + base, t1 + base, det_rng2);
        const auto d6_tags = photonics::detect(to_d6, modulated(cfg.detectors[kD6BobTime]), 6, 1,
                                               t0 + base, t1 + base, det_rng6);
        w.d2 = stamp_and_trim(d2_tags, clock_b, trim_ps, ep.fork(11));
        w.d6 = stamp_and_trim(d6_tags, clock_b, trim_ps, ep.fork(12));
        w.d6_raw_count = d6_tags.size();
    }

    {  // ET-EBS2: idler local at Bob, signal over the link to Alice
        Rng gen = ep.fork(13);
        const auto pairs = photonics::generate_pairs(cfg.source_bob, cfg.epoch_seconds, gen, t0);
        const auto idler = photonics::arm_times(pairs, photonics::Arm::idler);
        const auto signal = photonics::arm_times(pairs, photonics::Arm::signal);

        Rng det_rng3 = ep.fork(14);
        const auto d3_tags = photonics::detect(idler, cfg.detectors[kD3BobLocal], 3, 1, t0, t1, det_rng3);
        w.d3 = stamp_and_trim(d3_tags, clock_b, trim_ps, ep.fork(15));

        Rng link_rng = ep.fork(16);
        const auto arrivals = channel::propagate(signal, link, attack, channel::Direction::backward, link_rng);
        Rng det_rng4 = ep.fork(17);
        const auto d4_tags = photonics::detect(arrivals, modulated(cfg.detectors[kD4AliceRecv]), 4, 0,
                                               t0 + base, t1 + base, det_rng4);
        w.d4 = stamp_and_trim(d4_tags, clock_a, 0, ep.fork(18));
    }

    return w;
}

ProtocolMessage expect_message(Transport& ep, MessageKind kind, std::uint32_t epoch,
                               std::chrono::milliseconds timeout) {
    // Frames from an earlier, failed epoch may still be in flight; discard them.
    while (true) {
        ProtocolMessage msg = decode_message(ep.recv(timeout));
        if (msg.epoch_index < epoch) continue;
        if (msg.epoch_index > epoch || msg.kind != kind)
            throw TransportError("protocol desync: unexpected message");
        return msg;
    }
}

coincidence::PeakFit fit_from_report(const TwttReport& r) {
    coincidence::PeakFit f;
    f.center_ps = r.center_ps;
    f.fwhm_ps = r.fwhm_ps;
    f.amplitude = r.amplitude;
    f.background = r.background;
    f.center_uncertainty_ps = r.uncertainty_ps;
    return f;
}

TwttReport report_from_fit(const std::optional<coincidence::PeakFit>& fit, std::uint8_t direction) {
    TwttReport r;
    r.direction = direction;
    r.fit_valid = fit.has_value();
    if (fit) {
        r.center_ps = fit->center_ps;
        r.fwhm_ps = fit->fwhm_ps;
        r.amplitude = fit->amplitude;
        r.background = fit->background;
        r.uncertainty_ps = fit->center_uncertainty_ps;
    }
    return r;
}

struct QkdEpochOutcome {
    bool valid = false;
    doqkd::KeyBatch batch;
    std::vector<std::uint16_t> key_symbols;
    double qber_check = 0.0;
    std::uint64_t key_pairs = 0;
};

QkdEpochOutcome run_qkd_epoch(const ScenarioConfig& cfg, const std::vector<Instant>& alice_time,
                              const std::vector<Instant>& bob_time, Instant bob_shift_ps,
                              std::uint64_t split_salt, Transport& alice_ep, Transport& bob_ep,
                              std::uint32_t epoch, std::chrono::milliseconds timeout) {
    QkdEpochOutcome out;

    std::vector<Instant> bob_corrected;
    bob_corrected.reserve(bob_time.size());
    for (Instant t : bob_time) {
        const Instant c = t - bob_shift_ps;
        if (c >= cfg.encoding.frame_origin_ps) bob_corrected.push_back(c);
    }

    std::vector<Instant> alice_in;
    alice_in.reserve(alice_time.size());
    for (Instant t : alice_time)
        if (t >= cfg.encoding.frame_origin_ps) alice_in.push_back(t);

    const auto events_a = doqkd::assign_bins(alice_in, cfg.encoding);
    const auto events_b = doqkd::assign_bins(bob_corrected, cfg.encoding);

    // Announce lone frames: (frame, bin) only.
    auto announce_of = [](std::span<const doqkd::SiftedEvent> events) {
        SiftAnnounce a;
        for (std::size_t i = 0; i < events.size();) {
            std::size_t j = i;
            while (j < events.size() && events[j].frame_no == events[i].frame_no) ++j;
            if (j - i == 1) {
                a.frame_no.push_back(events[i].frame_no);
                a.bin_no.push_back(events[i].bin_no);
            }
            i = j;
        }
        return a;
    };

    alice_ep.send(encode_message(
        {MessageKind::sift_announce, epoch, NodeId::alice, announce_of(events_a)}));
    bob_ep.send(encode_message(
        {MessageKind::sift_announce, epoch, NodeId::bob, announce_of(events_b)}));
    (void)expect_message(bob_ep, MessageKind::sift_announce, epoch, timeout);
    (void)expect_message(alice_ep, MessageKind::sift_announce, epoch, timeout);

    out.batch = doqkd::sift(events_a, events_b);
    if (out.batch.pair_count() == 0) return out;
    doqkd::split_batch(out.batch, cfg.security.key_fraction, split_salt);

    // Alice discloses the check subset; Bob estimates the check QBER.
    BatchConfirm alice_confirm;
    alice_confirm.pair_count = out.batch.pair_count();
    for (std::size_t i = 0; i < out.batch.pair_count(); ++i)
        if (out.batch.is_check[i]) {
            alice_confirm.check_frames.push_back(out.batch.frames[i]);
            alice_confirm.check_slots.push_back(out.batch.symbols_a[i]);
        }
    alice_ep.send(encode_message({MessageKind::batch_confirm, epoch, NodeId::alice, alice_confirm}));
    const auto alice_side = std::get<BatchConfirm>(
        expect_message(bob_ep, MessageKind::batch_confirm, epoch, timeout).body);

    std::size_t check_pairs = 0, check_errors = 0;
    for (std::size_t i = 0, k = 0; i < out.batch.pair_count(); ++i) {
        if (!out.batch.is_check[i]) continue;
        if (k < alice_side.check_slots.size() && alice_side.check_frames[k] == out.batch.frames[i]) {
            ++check_pairs;
            if (alice_side.check_slots[k] != out.batch.symbols_b[i]) ++check_errors;
            ++k;
        }
    }
    BatchConfirm bob_confirm;
    bob_confirm.pair_count = out.batch.pair_count();
    bob_confirm.qber_check =
        check_pairs > 0 ? static_cast<double>(check_errors) / static_cast<double>(check_pairs) : 0.0;
    bob_ep.send(encode_message({MessageKind::batch_confirm, epoch, NodeId::bob, bob_confirm}));
    const auto confirm = std::get<BatchConfirm>(
        expect_message(alice_ep, MessageKind::batch_confirm, epoch, timeout).body);
    out.qber_check = confirm.qber_check;

    for (std::size_t i = 0; i < out.batch.pair_count(); ++i) {
        if (out.batch.is_check[i]) continue;
        out.key_symbols.push_back(out.batch.symbols_a[i]);
        ++out.key_pairs;
    }
    out.valid = true;
    return out;
}

}  // namespace

std::vector<qtwtt::TwttMeasurement> ScenarioReport::measurements() const {
    std::vector<qtwtt::TwttMeasurement> out;
    out.reserve(epochs.size());
    for (const auto& e : epochs) out.push_back(e.measurement);
    return out;
}

std::uint64_t ScenarioReport::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const void* p, std::size_t n) { h = fnv1a64(p, n, h); };
    auto mix_d = [&](double v) { mix(&v, sizeof(v)); };
    auto mix_u = [&](std::uint64_t v) { mix(&v, sizeof(v)); };

    for (const auto& e : epochs) {
        mix_u(static_cast<std::uint64_t>(e.epoch_index));
        mix_u(e.twtt_valid);
        mix_u(e.qkd_valid);
        mix_u(e.transport_failed);
        mix_d(e.measurement.t1_ps);
        mix_d(e.measurement.t2_ps);
        mix_d(e.measurement.t0_ps);
        mix_d(e.measurement.link_delay_ps);
        mix_d(e.measurement.t0_uncertainty_ps);
        mix_d(e.fit_ab_fwhm_ps);
        mix_d(e.fit_ba_fwhm_ps);
        mix_d(e.coincidences_ab);
        mix_d(e.coincidences_ba);
        mix_d(e.bob_time_singles_hz);
        mix_u(e.pairs);
        mix_u(e.key_pairs);
        mix_d(e.qber);
        mix_d(e.qber_check);
        mix_d(e.rkr_bps);
        mix_d(e.security.i_ab);
        mix_d(e.security.chi_ae);
        mix_d(e.security.delta_fk);
        mix_d(e.security.delta_i);
        mix_d(e.security.skr_bps);
        mix_u(e.security.n);
    }
    if (!key_symbols.empty()) mix(key_symbols.data(), key_symbols.size() * sizeof(key_symbols[0]));
    mix_d(pooled.i_ab);
    mix_d(pooled.chi_ae);
    mix_d(pooled.delta_fk);
    mix_d(pooled.delta_i);
    mix_d(pooled.skr_bps);
    mix_u(pooled.n);
    if (!corrected_bob_qkd_times.empty())
        mix(corrected_bob_qkd_times.data(), corrected_bob_qkd_times.size() * sizeof(Instant));
    return h;
}

ScenarioReport run_scenario(const ScenarioConfig& cfg) {
    TransportPair pair = cfg.transport == TransportKind::socket ? make_loopback_socket_pair()
                                                                : make_inproc_pair();
    return run_scenario(cfg, *pair.alice, *pair.bob);
}

ScenarioReport run_scenario(const ScenarioConfig& cfg, Transport& alice_ep, Transport& bob_ep) {
    cfg.validate();
    const int n_epochs = cfg.n_epochs();
    const auto timeout = std::chrono::milliseconds(cfg.transport_timeout_ms);
    const std::uint64_t split_salt = mix64(cfg.seed ^ 0x5f375a86ull);

    ClockModel clock_a = cfg.clock_alice;
    ClockModel clock_b = cfg.clock_bob;
    clock_a.prepare_walk(cfg.duration_seconds + cfg.epoch_seconds);
    clock_b.prepare_walk(cfg.duration_seconds + cfg.epoch_seconds);

    const channel::LinkState link(cfg.link_base_delay_ps, cfg.link_drift, cfg.link_transmittance,
                                  cfg.link_residual_broadening_sigma_ps, mix64(cfg.seed ^ 0x77),
                                  cfg.duration_seconds + cfg.epoch_seconds);

    const Rng root = make_rng(cfg.seed);
    qtwtt::ServoState servo{0.0, cfg.servo_gain, cfg.epoch_seconds};

    ScenarioReport report;
    report.total_duration_s = n_epochs * cfg.epoch_seconds;

    doqkd::KeyBatch pooled_batch;
    double pooled_duration = 0.0;
    std::vector<double> measured_sigmas;
    Instant last_shift = cfg.link_base_delay_ps;

    for (int e = 0; e < n_epochs; ++e) {
        EpochResult er;
        er.epoch_index = e;

        const Instant trim =
            cfg.qts == QtsMode::servo ? static_cast<Instant>(std::llround(servo.accumulated_correction_ps)) : 0;
        const WorldEpoch w = simulate_epoch(cfg, link, clock_a, clock_b, e, trim, root);
        er.bob_time_singles_hz = static_cast<double>(w.d6_raw_count) / cfg.epoch_seconds;

        try {
            const auto epoch_u = static_cast<std::uint32_t>(e);
            // Tag digests cross the link: Alice's D1 to Bob, Bob's D3 to Alice.
            alice_ep.send(encode_message(
                {MessageKind::tag_digest, epoch_u, NodeId::alice, TagDigest{1, w.d1}}));
            bob_ep.send(encode_message(
                {MessageKind::tag_digest, epoch_u, NodeId::bob, TagDigest{3, w.d3}}));

            const auto digest_a = std::get<TagDigest>(
                expect_message(bob_ep, MessageKind::tag_digest, epoch_u, timeout).body);
            const auto hist_ab = coincidence::cross_correlate(
                digest_a.tags, w.d2, cfg.link_base_delay_ps, cfg.corr_half_window_ps, cfg.corr_bin_ps);
            const auto fit_ab = coincidence::fit_gaussian_peak(hist_ab);
            bob_ep.send(encode_message(
                {MessageKind::twtt_report, epoch_u, NodeId::bob, report_from_fit(fit_ab, 0)}));

            const auto digest_b = std::get<TagDigest>(
                expect_message(alice_ep, MessageKind::tag_digest, epoch_u, timeout).body);
            const auto hist_ba = coincidence::cross_correlate(
                digest_b.tags, w.d4, cfg.link_base_delay_ps, cfg.corr_half_window_ps, cfg.corr_bin_ps);
            const auto fit_ba = coincidence::fit_gaussian_peak(hist_ba);
            alice_ep.send(encode_message(
                {MessageKind::twtt_report, epoch_u, NodeId::alice, report_from_fit(fit_ba, 1)}));

            const auto fwd_report = std::get<TwttReport>(
                expect_message(alice_ep, MessageKind::twtt_report, epoch_u, timeout).body);
            const auto bwd_report = std::get<TwttReport>(
                expect_message(bob_ep, MessageKind::twtt_report, epoch_u, timeout).body);

            if (cfg.record_histograms && e == 0) {
                report.first_epoch_hist_ab = hist_ab;
                report.first_epoch_hist_ba = hist_ba;
            }

            if (fwd_report.fit_valid && bwd_report.fit_valid) {
                er.measurement =
                    qtwtt::extract_offsets(fit_from_report(fwd_report), fit_from_report(bwd_report), e);
                er.twtt_valid = true;
                er.fit_ab_fwhm_ps = fwd_report.fwhm_ps;
                er.fit_ba_fwhm_ps = bwd_report.fwhm_ps;
                const auto metrics_ab = coincidence::coincidence_metrics(
                    hist_ab, fit_from_report(fwd_report), cfg.coincidence_window_ps);
                const auto metrics_ba = coincidence::coincidence_metrics(
                    hist_ba, fit_from_report(bwd_report), cfg.coincidence_window_ps);
                er.coincidences_ab = metrics_ab.true_coincidences;
                er.coincidences_ba = metrics_ba.true_coincidences;
                measured_sigmas.push_back(fwd_report.fwhm_ps / photonics::kFwhmToSigma);
                if (cfg.qts == QtsMode::servo) servo = qtwtt::servo_update(servo, er.measurement);
            }

            // Key pipeline on the forward (ET-EBS1) time-basis stream.
            Instant shift = last_shift;
            if (cfg.qts == QtsMode::off) {
                shift = cfg.link_base_delay_ps;
            } else if (er.twtt_valid) {
                shift = static_cast<Instant>(std::llround(er.measurement.t1_ps));
            }
            last_shift = shift;

            auto qkd = run_qkd_epoch(cfg, w.d5, w.d6, shift, split_salt, alice_ep, bob_ep,
                                     epoch_u, timeout);
            er.pairs = qkd.batch.pair_count();
            if (er.pairs > 0) {
                const auto km = doqkd::key_metrics(qkd.batch, cfg.epoch_seconds, cfg.encoding.dimension_exp);
                er.qber = km.qber;
                er.rkr_bps = km.rkr_bps;
                er.qber_check = qkd.qber_check;
                er.key_pairs = qkd.key_pairs;
                if (er.pairs >= 1000 && !measured_sigmas.empty()) {
                    const doqkd::BaselineWidths widths{
                        cfg.baseline_fwhm_ps / photonics::kFwhmToSigma, measured_sigmas.back()};
                    er.security =
                        doqkd::security_analysis(qkd.batch, cfg.security, widths, cfg.encoding.dimension_exp);
                }
                er.qkd_valid = qkd.valid;
                report.key_symbols.insert(report.key_symbols.end(), qkd.key_symbols.begin(),
                                          qkd.key_symbols.end());
                pooled_batch.symbols_a.insert(pooled_batch.symbols_a.end(),
                                              qkd.batch.symbols_a.begin(), qkd.batch.symbols_a.end());
                pooled_batch.symbols_b.insert(pooled_batch.symbols_b.end(),
                                              qkd.batch.symbols_b.begin(), qkd.batch.symbols_b.end());
                pooled_batch.is_check.insert(pooled_batch.is_check.end(), qkd.batch.is_check.begin(),
                                             qkd.batch.is_check.end());
                pooled_batch.frames.insert(pooled_batch.frames.end(), qkd.batch.frames.begin(),
                                           qkd.batch.frames.end());
                pooled_duration += cfg.epoch_seconds;
            }

            if (cfg.record_corrected_times)
                for (Instant t : w.d6)
                    report.corrected_bob_qkd_times.push_back(t - shift);
            if (cfg.record_time_basis) {
                report.alice_time_tags.insert(report.alice_time_tags.end(), w.d5.begin(), w.d5.end());
                report.bob_time_tags_raw.insert(report.bob_time_tags_raw.end(), w.d6.begin(), w.d6.end());
            }
        } catch (const TransportError&) {
            er.transport_failed = true;
            er.twtt_valid = false;
            er.qkd_valid = false;
        }

        report.epochs.push_back(std::move(er));
    }

    if (pooled_batch.pair_count() >= 1000 && !measured_sigmas.empty()) {
        double sigma_sum = 0.0;
        for (double s : measured_sigmas) sigma_sum += s;
        const doqkd::BaselineWidths widths{cfg.baseline_fwhm_ps / photonics::kFwhmToSigma,
                                           sigma_sum / static_cast<double>(measured_sigmas.size())};
        pooled_batch.duration_s = pooled_duration;
        doqkd::KeyBatch scored = pooled_batch;
        (void)doqkd::key_metrics(scored, pooled_duration, cfg.encoding.dimension_exp);
        report.pooled = doqkd::security_analysis(scored, cfg.security, widths, cfg.encoding.dimension_exp);
    } else {
        report.pooled.n = pooled_batch.pair_count();
    }
    return report;
}

double scenario_skr(const ScenarioReport& report) { return report.pooled.skr_bps; }

std::vector<doqkd::ScanPoint> attack_scan(const ScenarioConfig& base,
                                          std::span<const double> tau_list_ps, bool qts_enabled) {
    std::vector<double> skr;
    skr.reserve(tau_list_ps.size());
    for (double tau : tau_list_ps) {
        ScenarioConfig cfg = base;
        cfg.qts = qts_enabled ? QtsMode::servo : QtsMode::off;
        cfg.attack_from_epoch = 0;
        if (tau > 0.0)
            cfg.attack = channel::AttackParams{tau, channel::Direction::forward};
        else
            cfg.attack.reset();
        skr.push_back(scenario_skr(run_scenario(cfg)));
    }
    return doqkd::normalize_scan(tau_list_ps, skr);
}

double injected_delay_skr(const ScenarioConfig& cfg, std::span<const Instant> alice_tags,
                          std::span<const Instant> bob_tags_raw, double extra_delay_ps,
                          double duration_s, double measured_sigma_ps) {
    const Instant inject = static_cast<Instant>(std::llround(extra_delay_ps));
    std::vector<Instant> bob_corrected;
    bob_corrected.reserve(bob_tags_raw.size());
    for (Instant t : bob_tags_raw) {
        const Instant c = t + inject - cfg.link_base_delay_ps;
        if (c >= cfg.encoding.frame_origin_ps) bob_corrected.push_back(c);
    }
    std::vector<Instant> alice_in;
    alice_in.reserve(alice_tags.size());
    for (Instant t : alice_tags)
        if (t >= cfg.encoding.frame_origin_ps) alice_in.push_back(t);

    const auto events_a = doqkd::assign_bins(alice_in, cfg.encoding);
    const auto events_b = doqkd::assign_bins(bob_corrected, cfg.encoding);
    doqkd::KeyBatch batch = doqkd::sift(events_a, events_b);
    if (batch.pair_count() < 1000) return 0.0;
    doqkd::split_batch(batch, cfg.security.key_fraction, mix64(cfg.seed ^ 0x5f375a86ull));
    (void)doqkd::key_metrics(batch, duration_s, cfg.encoding.dimension_exp);
    const doqkd::BaselineWidths widths{cfg.baseline_fwhm_ps / photonics::kFwhmToSigma,
                                       measured_sigma_ps};
    return doqkd::security_analysis(batch, cfg.security, widths, cfg.encoding.dimension_exp).skr_bps;
}

}  // namespace qnet::netharness
