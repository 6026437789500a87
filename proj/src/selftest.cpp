#include "qnet/selftest.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <vector>

#include "qnet/coincidence.hpp"
#include "qnet/doqkd.hpp"
#include "qnet/qtwtt.hpp"
#include "qnet/timebase.hpp"

namespace qnet::selftest {

namespace {

using clock_type = std::chrono::steady_clock;

// Independent O(n^2) correlation oracle.
coincidence::Histogram brute_force_correlate(const std::vector<Instant>& a,
                                             const std::vector<Instant>& b, Instant center,
                                             Instant half_window, Instant bin_width) {
    coincidence::Histogram h;
    h.bin_width_ps = bin_width;
    h.origin_ps = center - half_window;
    h.counts.assign(static_cast<std::size_t>(2 * half_window / bin_width), 0);
    for (Instant ta : a)
        for (Instant tb : b) {
            const Instant d = tb - ta;
            if (d < h.origin_ps || d >= center + half_window) continue;
            ++h.counts[static_cast<std::size_t>((d - h.origin_ps) / bin_width)];
        }
    return h;
}

bool suite_correlate() {
    Rng rng = make_rng(20240601);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t na = 20 + rng.uniform_below(280);
        const std::size_t nb = 20 + rng.uniform_below(280);
        std::vector<Instant> a(na), b(nb);
        Instant t = 0;
        for (auto& x : a) x = (t += static_cast<Instant>(rng.uniform_below(2000)));
        t = static_cast<Instant>(rng.uniform_below(500));
        for (auto& x : b) x = (t += static_cast<Instant>(rng.uniform_below(2000)));
        const Instant bw = 1 + static_cast<Instant>(rng.uniform_below(3));
        const Instant center = 0;
        const Instant use_hw = bw * 256;
        const auto expected = brute_force_correlate(a, b, center, use_hw, bw);
        const auto parallel = coincidence::cross_correlate(a, b, center, use_hw, bw);
        const auto serial = coincidence::cross_correlate_serial(a, b, center, use_hw, bw);
        if (expected.counts != parallel.counts || expected.counts != serial.counts) return false;
    }
    return true;
}

// Rule-following sift oracle over explicit frame maps.
doqkd::KeyBatch sift_oracle(const std::vector<doqkd::SiftedEvent>& alice,
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
    batch.is_check.assign(batch.pair_count(), 0);
    return batch;
}

bool suite_sift(bool inject_mismatch) {
    Rng rng = make_rng(777001);
    bool injected = false;
    for (int trial = 0; trial < 400; ++trial) {
        std::vector<doqkd::SiftedEvent> alice, bob;
        const int frames = 1 + static_cast<int>(rng.uniform_below(6));
        for (int f = 0; f < frames; ++f) {
            const int ca = static_cast<int>(rng.uniform_below(4));
            const int cb = static_cast<int>(rng.uniform_below(4));
            for (int k = 0; k < ca; ++k)
                alice.push_back({f, static_cast<std::uint32_t>(rng.uniform_below(4)),
                                 static_cast<std::uint32_t>(rng.uniform_below(3))});
            for (int k = 0; k < cb; ++k)
                bob.push_back({f, static_cast<std::uint32_t>(rng.uniform_below(4)),
                               static_cast<std::uint32_t>(rng.uniform_below(3))});
        }
        auto expected = sift_oracle(alice, bob);
        if (inject_mismatch && !injected && !expected.symbols_b.empty()) {
            expected.symbols_b[0] = static_cast<std::uint16_t>(expected.symbols_b[0] + 1);
            injected = true;
        }
        const auto actual = doqkd::sift(alice, bob);
        if (expected.symbols_a != actual.symbols_a || expected.symbols_b != actual.symbols_b ||
            expected.frames != actual.frames)
            return false;
    }
    return true;
}

bool suite_tdev() {
    Rng rng = make_rng(31415);
    const double sigma = 7.0;
    std::vector<double> samples(10000);
    for (auto& s : samples) s = rng.gaussian(0.0, sigma);
    const double t = tdev(samples, 1);
    return std::fabs(t - sigma) / sigma < 0.10;
}

bool suite_peak_fit() {
    Rng rng = make_rng(99283);
    const double center = 588000010.0;
    const double sigma = 83.6 / 2.3548;
    std::vector<Instant> diffs;
    for (int i = 0; i < 5000; ++i)
        diffs.push_back(static_cast<Instant>(std::llround(rng.gaussian(center, sigma))));
    coincidence::Histogram h;
    h.bin_width_ps = 1;
    h.origin_ps = 588000000 - 2048;
    h.counts.assign(4096, 0);
    for (int i = 0; i < 4096; ++i) h.counts[i] += (rng.uniform() < 0.5) ? 1 : 0;
    for (Instant d : diffs) {
        const Instant k = d - h.origin_ps;
        if (k >= 0 && k < 4096) ++h.counts[static_cast<std::size_t>(k)];
    }
    const auto fit = coincidence::fit_gaussian_peak(h);
    if (!fit) return false;
    return std::fabs(fit->center_ps - center) <= std::max(4.0 * fit->center_uncertainty_ps, 2.0);
}

bool suite_twtt_algebra() {
    Rng rng = make_rng(5150);
    for (int i = 0; i < 1000; ++i) {
        coincidence::PeakFit ab, ba;
        ab.center_ps = rng.gaussian(0.0, 1e9);
        ba.center_ps = rng.gaussian(0.0, 1e9);
        ab.center_uncertainty_ps = rng.uniform();
        ba.center_uncertainty_ps = rng.uniform();
        const auto m = qtwtt::extract_offsets(ab, ba, i);
        if (m.t0_ps != (ab.center_ps - ba.center_ps) / 2.0) return false;
        if (m.link_delay_ps != (ab.center_ps + ba.center_ps) / 2.0) return false;
    }
    return true;
}

}  // namespace

bool run_selftest(std::ostream& out, FaultInject fault) {
    struct Suite {
        const char* name;
        bool ok;
        double ms;
    };
    std::vector<Suite> suites;

    auto run = [&](const char* name, auto&& fn) {
        const auto start = clock_type::now();
        const bool ok = fn();
        const double ms =
            std::chrono::duration<double, std::milli>(clock_type::now() - start).count();
        suites.push_back({name, ok, ms});
    };

    run("correlate-vs-bruteforce", [] { return suite_correlate(); });
    run("sift-vs-enumeration", [&] { return suite_sift(fault == FaultInject::sift_mismatch); });
    run("tdev-white-noise", [] { return suite_tdev(); });
    run("gaussian-peak-fit", [] { return suite_peak_fit(); });
    run("twtt-algebra", [] { return suite_twtt_algebra(); });

    bool all_ok = true;
    for (const auto& s : suites) {
        out << (s.ok ? "PASS" : "FAIL") << "  " << s.name << "  (" << s.ms << " ms)\n";
        all_ok = all_ok && s.ok;
    }
    out << (all_ok ? "selftest: all suites passed\n" : "selftest: FAILURES detected\n");
    return all_ok;
}

}  // namespace qnet::selftest
