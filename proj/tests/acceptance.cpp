// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// fails. Runs the whole set on a desk machine in a few minutes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "qnet/config.hpp"
#include "qnet/netharness.hpp"

using namespace qnet;
using namespace qnet::netharness;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ScenarioConfig load_preset(const char* name) {
    return config::parse_config_file(std::string(QNETSIM_SOURCE_DIR) + "/presets/" + name + ".cfg");
}

ScenarioConfig noiseless_config() {
    ScenarioConfig cfg;
    cfg.seed = 11;
    cfg.epoch_seconds = 1.0;
    cfg.duration_seconds = 2.0;
    cfg.qts = QtsMode::servo;
    cfg.source_alice = {30000.0, 2.0, "ET-EBS1"};
    cfg.source_bob = {30000.0, 2.0, "ET-EBS2"};
    for (auto& d : cfg.detectors) d = {1.0, 0.0, 0.0, 0};
    cfg.clock_bob.offset_ps = 10.0;
    cfg.link_base_delay_ps = 588'000'000;
    cfg.link_transmittance = 1.0;
    cfg.record_corrected_times = true;
    return cfg;
}

// --- 1: two-way extraction algebra, bit-exact -------------------------------
void criterion_1() {
    Rng rng = make_rng(101);
    bool ok = true;
    for (int i = 0; i < 10000 && ok; ++i) {
        coincidence::PeakFit ab, ba;
        ab.center_ps = rng.gaussian(0.0, 1e9);
        ba.center_ps = rng.gaussian(0.0, 1e9);
        ab.center_uncertainty_ps = ba.center_uncertainty_ps = 0.5;
        const auto m = qtwtt::extract_offsets(ab, ba, i);
        ok = ok && m.t0_ps == (ab.center_ps - ba.center_ps) / 2.0 &&
             m.link_delay_ps == (ab.center_ps + ba.center_ps) / 2.0;
    }
    report(1, ok, "t0=(t1-t2)/2 and tau=(t1+t2)/2 bit-exact on 1e4 random fit pairs");
}

// --- 2: attack mitigation identity, exact -----------------------------------
void criterion_2() {
    const auto start = std::chrono::steady_clock::now();
    const auto baseline = run_scenario(noiseless_config());
    bool ok = !baseline.corrected_bob_qkd_times.empty();
    for (int tau = 10; tau <= 120 && ok; tau += 10) {
        auto cfg = noiseless_config();
        cfg.attack = channel::AttackParams{static_cast<double>(tau), channel::Direction::forward};
        const auto rep = run_scenario(cfg);
        ok = rep.corrected_bob_qkd_times == baseline.corrected_bob_qkd_times;
    }
    const double secs = seconds_since(start);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "corrected Bob arrival times identical for every tau_eve in 0..120 ps (%.1f s%s)",
                  secs, secs < 10.0 ? "" : ", over budget");
    report(2, ok && secs < 10.0, buf);
}

// --- 3: attack scan without QTS ---------------------------------------------
void criterion_3() {
    const auto start = std::chrono::steady_clock::now();
    auto cfg = load_preset("attack-scan");
    std::vector<double> taus;
    for (int t = 0; t <= 120; t += 10) taus.push_back(t);
    const auto points = attack_scan(cfg, taus, /*qts_enabled=*/false);

    bool monotone = true;
    for (std::size_t i = 1; i < points.size(); ++i)
        monotone = monotone && points[i].normalized_skr <= points[i - 1].normalized_skr + 1e-12;
    const bool endpoint = points.back().normalized_skr <= 0.30;

    // Delay-injection oracle: shift the recorded no-attack timing data and
    // re-run the key pipeline; the full simulations must agree point by point.
    auto base_cfg = cfg;
    base_cfg.qts = QtsMode::off;
    base_cfg.record_time_basis = true;
    const auto baseline = run_scenario(base_cfg);
    double sigma_sum = 0.0;
    int sigma_n = 0;
    for (const auto& e : baseline.epochs)
        if (e.twtt_valid) {
            sigma_sum += e.fit_ab_fwhm_ps / photonics::kFwhmToSigma;
            ++sigma_n;
        }
    const double measured_sigma = sigma_sum / sigma_n;
    const double skr0 = injected_delay_skr(base_cfg, baseline.alice_time_tags,
                                           baseline.bob_time_tags_raw, 0.0,
                                           baseline.total_duration_s, measured_sigma);
    bool oracle_ok = skr0 > 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < taus.size() && oracle_ok; ++i) {
        const double injected = injected_delay_skr(base_cfg, baseline.alice_time_tags,
                                                   baseline.bob_time_tags_raw, taus[i],
                                                   baseline.total_duration_s, measured_sigma) /
                                skr0;
        worst = std::max(worst, std::fabs(injected - points[i].normalized_skr));
        oracle_ok = oracle_ok && std::fabs(injected - points[i].normalized_skr) < 0.02;
    }

    const double secs = seconds_since(start);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "no-QTS scan monotone=%d, SKR(120)=%.3f <= 0.30, injection oracle max dev %.4f "
                  "(%.1f s)",
                  monotone, points.back().normalized_skr, worst, secs);
    report(3, monotone && endpoint && oracle_ok && secs < 60.0, buf);
}

// --- 4: attack scan with QTS ------------------------------------------------
void criterion_4() {
    auto cfg = load_preset("attack-scan");
    std::vector<double> taus;
    for (int t = 0; t <= 120; t += 10) taus.push_back(t);
    const auto points = attack_scan(cfg, taus, /*qts_enabled=*/true);
    bool ok = true;
    double lo = 1e9, hi = -1e9;
    for (const auto& p : points) {
        lo = std::min(lo, p.normalized_skr);
        hi = std::max(hi, p.normalized_skr);
        ok = ok && p.normalized_skr >= 0.85 && p.normalized_skr <= 1.15;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "QTS scan flat: normalized SKR in [%.4f, %.4f] within [0.85, 1.15]",
                  lo, hi);
    report(4, ok, buf);
}

// --- 5: synchronization stability -------------------------------------------
void criterion_5() {
    const auto start = std::chrono::steady_clock::now();
    auto cfg = load_preset("common-clock");
    const auto rep = run_scenario(cfg);

    std::vector<double> offsets;
    double coinc = 0.0;
    for (const auto& e : rep.epochs)
        if (e.twtt_valid) {
            offsets.push_back(e.measurement.t0_ps);
            coinc += e.coincidences_ab;
        }
    coinc /= static_cast<double>(offsets.size());
    const double std_ps = stddev(offsets);

    // Weighted log-log fit of the TDEV curve over 5..400 s.
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    double tdev5 = 0.0;
    for (int m : {1, 2, 4, 8, 16, 32, 80}) {
        const double dev = tdev(offsets, m);
        if (m == 1) tdev5 = dev;
        const double w = static_cast<double>(offsets.size() / m - 2);
        const double lx = std::log10(m * cfg.epoch_seconds), ly = std::log10(dev);
        sw += w;
        sx += w * lx;
        sy += w * ly;
        sxx += w * lx * lx;
        sxy += w * lx * ly;
    }
    const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    const double secs = seconds_since(start);

    const bool ok = std_ps <= 3.0 && tdev5 <= 2.5 && std::fabs(slope + 0.5) <= 0.1 &&
                    coinc > 3000.0 && secs < 60.0;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "epoch std %.3f ps <= 3, TDEV(5s) %.3f ps <= 2.5, slope %.3f in -0.5+-0.1, "
                  "%.0f coincidences/epoch (%.1f s)",
                  std_ps, tdev5, slope, coinc, secs);
    report(5, ok, buf);
}

// --- 6: coincidence engine oracle -------------------------------------------
void criterion_6() {
    Rng rng = make_rng(606);
    bool exact = true;
    for (int trial = 0; trial < 200 && exact; ++trial) {
        Rng ra = rng.fork(trial, 1), rb = rng.fork(trial, 2);
        const std::size_t na = 100 + ra.uniform_below(900);
        const std::size_t nb = 100 + rb.uniform_below(900);
        std::vector<Instant> a(na), b(nb);
        Instant t = 0;
        for (auto& x : a) x = (t += static_cast<Instant>(ra.uniform_below(5000)));
        t = static_cast<Instant>(rb.uniform_below(3000));
        for (auto& x : b) x = (t += static_cast<Instant>(rb.uniform_below(5000)));
        const Instant bw = 1 + static_cast<Instant>(rng.uniform_below(3));
        const Instant hw = bw * 512;

        coincidence::Histogram brute;
        brute.bin_width_ps = bw;
        brute.origin_ps = -hw;
        brute.counts.assign(static_cast<std::size_t>(2 * hw / bw), 0);
        for (Instant ta : a)
            for (Instant tb : b) {
                const Instant d = tb - ta;
                if (d < -hw || d >= hw) continue;
                ++brute.counts[static_cast<std::size_t>((d + hw) / bw)];
            }
        exact = coincidence::cross_correlate(a, b, 0, hw, bw).counts == brute.counts &&
                coincidence::cross_correlate_serial(a, b, 0, hw, bw).counts == brute.counts;
    }

    bool floor_ok = true;
    double worst_pull = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        Rng r = make_rng(7000 + seed);
        const double ra_hz = 1.5e5, rb_hz = 1.2e5, duration = 0.5;
        std::vector<Instant> a, b;
        double ta = 0;
        while ((ta += r.exponential(1e12 / ra_hz)) < duration * 1e12)
            a.push_back(static_cast<Instant>(ta));
        double tb = 0;
        Rng r2 = r.fork(9);
        while ((tb += r2.exponential(1e12 / rb_hz)) < duration * 1e12)
            b.push_back(static_cast<Instant>(tb));
        const auto h = coincidence::cross_correlate(a, b, 0, 1000, 1);
        const double expected = ra_hz * rb_hz * 1e-12 * duration * 2000.0;
        const double pull =
            std::fabs(static_cast<double>(h.total()) - expected) / std::sqrt(expected);
        worst_pull = std::max(worst_pull, pull);
        floor_ok = floor_ok && pull < 5.0;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "cross_correlate == brute force on 200 instances; accidental floor worst pull "
                  "%.2f sigma over 20 seeds",
                  worst_pull);
    report(6, exact && floor_ok, buf);
}

// --- 7: sifting oracle, exhaustive ------------------------------------------
namespace sift_oracle_ns {
doqkd::KeyBatch oracle(const std::vector<doqkd::SiftedEvent>& alice,
                       const std::vector<doqkd::SiftedEvent>& bob) {
    std::map<std::int64_t, std::vector<doqkd::SiftedEvent>> fa, fb;
    for (const auto& e : alice) fa[e.frame_no].push_back(e);
    for (const auto& e : bob) fb[e.frame_no].push_back(e);
    doqkd::KeyBatch batch;
    for (const auto& [frame, list_a] : fa) {
        if (list_a.size() != 1) continue;
        const auto it = fb.find(frame);
        if (it == fb.end() || it->second.size() != 1) continue;
        if (list_a[0].bin_no != it->second[0].bin_no) continue;
        batch.symbols_a.push_back(static_cast<std::uint16_t>(list_a[0].slot_no));
        batch.symbols_b.push_back(static_cast<std::uint16_t>(it->second[0].slot_no));
        batch.frames.push_back(frame);
    }
    return batch;
}
}  // namespace sift_oracle_ns

void criterion_7() {
    bool ok = true;
    long long cases = 0;

    // Exhaustive: every per-frame count pattern in {0,1,2}^3 on both sides of
    // 3 frames, across a content sweep of slot/bin assignments.
    for (int pattern_a = 0; pattern_a < 27 && ok; ++pattern_a)
        for (int pattern_b = 0; pattern_b < 27 && ok; ++pattern_b)
            for (int content = 0; content < 32 && ok; ++content) {
                std::vector<doqkd::SiftedEvent> a, b;
                int pa = pattern_a, pb = pattern_b;
                std::uint32_t bits = static_cast<std::uint32_t>(content) * 2654435761u;
                auto next_bits = [&bits]() {
                    bits = bits * 1664525u + 1013904223u;
                    return bits >> 16;
                };
                for (int f = 0; f < 3; ++f) {
                    const int ca = pa % 3;
                    pa /= 3;
                    const int cb = pb % 3;
                    pb /= 3;
                    for (int k = 0; k < ca; ++k)
                        a.push_back({f, next_bits() % 4, next_bits() % 3});
                    for (int k = 0; k < cb; ++k)
                        b.push_back({f, next_bits() % 4, next_bits() % 3});
                }
                const auto expected = sift_oracle_ns::oracle(a, b);
                const auto actual = doqkd::sift(a, b);
                ok = actual.symbols_a == expected.symbols_a &&
                     actual.symbols_b == expected.symbols_b && actual.frames == expected.frames;
                ++cases;
            }

    // Randomized sweep at the stated bound: 6 frames, up to 4 events per side.
    Rng rng = make_rng(707);
    for (int trial = 0; trial < 20000 && ok; ++trial) {
        std::vector<doqkd::SiftedEvent> a, b;
        for (int f = 0; f < 6; ++f) {
            const int ca = static_cast<int>(rng.uniform_below(5));
            const int cb = static_cast<int>(rng.uniform_below(5));
            for (int k = 0; k < ca; ++k)
                a.push_back({f, static_cast<std::uint32_t>(rng.uniform_below(4)),
                             static_cast<std::uint32_t>(rng.uniform_below(3))});
            for (int k = 0; k < cb; ++k)
                b.push_back({f, static_cast<std::uint32_t>(rng.uniform_below(4)),
                             static_cast<std::uint32_t>(rng.uniform_below(3))});
        }
        const auto expected = sift_oracle_ns::oracle(a, b);
        const auto actual = doqkd::sift(a, b);
        ok = actual.symbols_a == expected.symbols_a && actual.symbols_b == expected.symbols_b;
        ++cases;
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "sift matches the enumeration oracle exactly on %lld cases",
                  cases);
    report(7, ok, buf);
}

// --- 8: QBER analytic check ---------------------------------------------------
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void criterion_8() {
    const doqkd::EncodingParams enc{6, 3, 110, 0};
    bool ok = true;
    std::string detail = "sim vs Gaussian escape-mass quadrature:";
    for (double sigma : {30.0, 50.0, 83.6 / 2.3548, 2.0 * 83.6 / 2.3548}) {
        // Quadrature oracle (integer-ps form).
        const std::int64_t tau = enc.bin_width_ps, slot_w = enc.slot_width_ps();
        const std::int64_t slots = enc.slots_per_frame();
        const int max_shift = static_cast<int>(std::ceil(6.0 * sigma / slot_w)) + 1;
        double keep_acc = 0.0, err_acc = 0.0;
        for (std::int64_t s = 0; s < slots; ++s)
            for (std::int64_t v = 0; v < tau; ++v)
                for (int m = -max_shift; m <= max_shift; ++m) {
                    if (s + m < 0 || s + m >= slots) continue;
                    const double lo = static_cast<double>(m * slot_w - v) - 0.5;
                    const double p = normal_cdf((lo + tau) / sigma) - normal_cdf(lo / sigma);
                    keep_acc += p;
                    if (m != 0) err_acc += p;
                }
        const double q_oracle = err_acc / keep_acc;

        Rng rng = make_rng(808 + static_cast<std::uint64_t>(sigma * 10));
        std::vector<Instant> ta, tb;
        const Instant frame_len = enc.frame_length_ps();
        const int n_pairs = 40000;
        for (int i = 0; i < n_pairs; ++i) {
            const Instant alice = static_cast<Instant>(i) * 3 * frame_len +
                                  static_cast<Instant>(rng.uniform_below(
                                      static_cast<std::uint64_t>(frame_len)));
            ta.push_back(alice);
            tb.push_back(alice + static_cast<Instant>(std::llround(rng.gaussian(0.0, sigma))));
        }
        std::sort(tb.begin(), tb.end());
        auto batch = doqkd::sift(doqkd::assign_bins(ta, enc), doqkd::assign_bins(tb, enc));
        const auto km = doqkd::key_metrics(batch, 1.0, enc.dimension_exp);
        const double se =
            std::sqrt(q_oracle * (1.0 - q_oracle) / static_cast<double>(batch.pair_count()));
        const double pull = std::fabs(km.qber - q_oracle) / std::max(se, 1e-12);
        char frag[64];
        std::snprintf(frag, sizeof(frag), " sigma=%.0f pull=%.2f", sigma, pull);
        detail += frag;
        ok = ok && pull <= 3.0;
    }
    report(8, ok, detail + " (3-sigma binomial)");
}

// --- 9: mutual information edges ---------------------------------------------
void criterion_9() {
    doqkd::JointHistogram perfect(64);
    for (std::size_t s = 0; s < 64; ++s)
        for (int k = 0; k < 500; ++k) perfect.add(s, s);
    const double mi_perfect = doqkd::mutual_information(perfect);
    const bool exact6 = std::fabs(mi_perfect - 6.0) < 1e-9;

    Rng rng = make_rng(909);
    doqkd::JointHistogram indep(64);
    const int n = 1000000;
    for (int i = 0; i < n; ++i) indep.add(rng.uniform_below(64), rng.uniform_below(64));
    const double bias_bound = 3.0 * (63.0 * 63.0) / (2.0 * n * std::log(2.0));
    const double mi_indep = doqkd::mutual_information(indep);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "perfect uniform D=6 -> %.9f bits; independent -> %.5f <= bias bound %.5f",
                  mi_perfect, mi_indep, bias_bound);
    report(9, exact6 && mi_indep <= bias_bound, buf);
}

// --- 10: finite-size behavior -------------------------------------------------
void criterion_10() {
    const auto start = std::chrono::steady_clock::now();
    bool decreasing = true;
    double last = 1e18;
    for (std::uint64_t n = 1000; n <= 100000000ull; n *= 2) {
        const double d = doqkd::finite_size_penalty(n, 1e-9, 1e-9);
        decreasing = decreasing && d < last;
        last = d;
    }
    const double asym_gap = doqkd::finite_size_penalty(100000000ull, 1e-9, 1e-9) / 3.5;
    const bool asym_ok = asym_gap < 0.01;  // delta_i(1e8) within 1% of the chi-and-beta-only value

    auto cfg = load_preset("security-cal");
    const auto rep = run_scenario(cfg);
    double qber = 0.0;
    std::uint64_t pairs = 0;
    for (const auto& e : rep.epochs) {
        qber += e.qber * static_cast<double>(e.pairs);
        pairs += e.pairs;
    }
    qber /= static_cast<double>(pairs);
    const bool band_ok = rep.pooled.delta_i >= 3.0 && rep.pooled.delta_i <= 4.0;
    const bool n_ok = rep.pooled.n > 150000 && rep.pooled.n < 600000;
    const double secs = seconds_since(start);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "delta_fk strictly decreasing, asymptotic gap %.4f; calibrated preset: n=%llu, "
                  "QBER %.3f, delta_i %.3f in [3.0, 4.0] (%.1f s)",
                  asym_gap, static_cast<unsigned long long>(rep.pooled.n), qber,
                  rep.pooled.delta_i, secs);
    report(10, decreasing && asym_ok && band_ok && n_ok, buf);
}

// --- 11: correlation throughput ------------------------------------------------
void criterion_11() {
    auto poisson_tags = [](std::size_t n, double rate_hz, Rng rng) {
        std::vector<Instant> tags(n);
        const double gap = 1e12 / rate_hz;
        double t = 0.0;
        for (auto& tag : tags) tag = static_cast<Instant>(t += rng.exponential(gap));
        return tags;
    };
    Rng rng = make_rng(1111);
    const auto a7 = poisson_tags(10000000, 1e4, rng.fork(1));
    const auto b7 = poisson_tags(10000000, 1e4, rng.fork(2));
    const auto a6 = poisson_tags(1000000, 1e4, rng.fork(3));
    const auto b6 = poisson_tags(1000000, 1e4, rng.fork(4));

    auto t6 = std::chrono::steady_clock::now();
    const auto h6 = coincidence::cross_correlate(a6, b6, 0, 500, 1);
    const double ms6 = seconds_since(t6) * 1e3;
    auto t7 = std::chrono::steady_clock::now();
    const auto h7 = coincidence::cross_correlate(a7, b7, 0, 500, 1);
    const double ms7 = seconds_since(t7) * 1e3;

    const bool fast = ms7 < 5000.0;
    const bool linear = ms7 / std::max(ms6, 0.01) <= 12.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "1e7 tags/side, 1 ns window, 1 ps bins: %.0f ms (< 5000); scaling 1e6->1e7 = "
                  "%.1fx (<= 12x); counts %llu/%llu",
                  ms7, ms7 / std::max(ms6, 0.01), static_cast<unsigned long long>(h6.total()),
                  static_cast<unsigned long long>(h7.total()));
    report(11, fast && linear, buf);
}

// --- 12: transport determinism ---------------------------------------------------
void criterion_12() {
    ScenarioConfig cfg;
    cfg.seed = 1212;
    cfg.epoch_seconds = 1.0;
    cfg.duration_seconds = 2.0;
    cfg.qts = QtsMode::servo;
    cfg.source_alice = {60000.0, 2.0, "ET-EBS1"};
    cfg.source_bob = {40000.0, 2.0, "ET-EBS2"};
    for (auto& d : cfg.detectors) d = {0.85, 59.1, 100.0, 20000};
    cfg.clock_bob.offset_ps = 25.0;
    cfg.link_base_delay_ps = 588'000'000;
    cfg.link_transmittance = 0.5;
    cfg.record_corrected_times = true;

    const auto inproc = run_scenario(cfg);
    auto cfg_socket = cfg;
    cfg_socket.transport = TransportKind::socket;
    const auto socket = run_scenario(cfg_socket);
    char buf[120];
    std::snprintf(buf, sizeof(buf), "inproc hash %016llx == socket hash %016llx",
                  static_cast<unsigned long long>(inproc.hash()),
                  static_cast<unsigned long long>(socket.hash()));
    report(12, inproc.hash() == socket.hash(), buf);
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    std::printf("acceptance: %d of 12 criteria passed (%.1f s total)\n", 12 - g_failures,
                seconds_since(start));
    return g_failures == 0 ? 0 : 1;
}
