#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qnet/doqkd.hpp"

using namespace qnet;
using namespace qnet::doqkd;

TEST_CASE("assign_bins interval arithmetic") {
    EncodingParams enc{1, 1, 100, 0};
    const auto e = assign_one(150, enc);
    CHECK(e.frame_no == 0);
    CHECK(e.slot_no == 1);
    CHECK(e.bin_no == 0);

    EncodingParams working{6, 3, 110, 0};
    CHECK(working.frame_length_ps() == 21120);
    const auto f = assign_one(21120, working);
    CHECK(f.frame_no == 1);
    CHECK(f.slot_no == 0);
    CHECK(f.bin_no == 0);

    // Exact bin edge goes to the upper bin (half-open convention).
    const auto g = assign_one(110, working);
    CHECK(g.frame_no == 0);
    CHECK(g.slot_no == 0);
    CHECK(g.bin_no == 1);
    const auto h = assign_one(109, working);
    CHECK(h.bin_no == 0);

    CHECK_THROWS_AS(assign_one(-1, working), std::invalid_argument);
}

TEST_CASE("sift basics from the protocol description") {
    // Matching lone events pair up and keep the slot numbers.
    std::vector<SiftedEvent> a{{0, 3, 1}};
    std::vector<SiftedEvent> b{{0, 3, 1}};
    auto batch = sift(a, b);
    REQUIRE(batch.pair_count() == 1);
    CHECK(batch.symbols_a[0] == 3);
    CHECK(batch.symbols_b[0] == 3);

    // A frame with two events on one side is discarded entirely.
    std::vector<SiftedEvent> a2{{0, 3, 1}, {0, 5, 1}};
    CHECK(sift(a2, b).pair_count() == 0);

    // Bin mismatch discards the frame pair.
    std::vector<SiftedEvent> b3{{0, 3, 2}};
    CHECK(sift(a, b3).pair_count() == 0);

    // Slot mismatch with matching bins is kept (that is what QBER measures).
    std::vector<SiftedEvent> b4{{0, 7, 1}};
    auto mism = sift(a, b4);
    REQUIRE(mism.pair_count() == 1);
    CHECK(mism.symbols_a[0] == 3);
    CHECK(mism.symbols_b[0] == 7);
}

TEST_CASE("sift matches the exhaustive oracle over bounded configurations") {
    // All per-frame count patterns in {0,1,2}^3 per side for 3 frames, with
    // every bin/slot combination for the lone events, plus randomized 6-frame
    // configurations with up to 4 events per frame and side.
    for (int pattern_a = 0; pattern_a < 27; ++pattern_a) {
        for (int pattern_b = 0; pattern_b < 27; ++pattern_b) {
            for (int content = 0; content < 16; ++content) {
                std::vector<SiftedEvent> a, b;
                int pa = pattern_a, pb = pattern_b, bits = content;
                for (int f = 0; f < 3; ++f) {
                    const int ca = pa % 3;
                    pa /= 3;
                    const int cb = pb % 3;
                    pb /= 3;
                    for (int k = 0; k < ca; ++k) {
                        a.push_back({f, static_cast<std::uint32_t>((bits & 1) ? 1 : 0),
                                     static_cast<std::uint32_t>((bits & 2) ? 1 : 0)});
                        bits = (bits >> 2) | ((bits & 3) << 2);
                    }
                    for (int k = 0; k < cb; ++k) {
                        b.push_back({f, static_cast<std::uint32_t>((bits & 2) ? 1 : 0),
                                     static_cast<std::uint32_t>((bits & 1) ? 1 : 0)});
                        bits = (bits >> 1) | ((bits & 1) << 3);
                    }
                }
                const auto expected = oracles::sift_oracle(a, b);
                const auto actual = sift(a, b);
                REQUIRE(actual.symbols_a == expected.symbols_a);
                REQUIRE(actual.symbols_b == expected.symbols_b);
                REQUIRE(actual.frames == expected.frames);
            }
        }
    }

    Rng rng = make_rng(42);
    for (int trial = 0; trial < 3000; ++trial) {
        std::vector<SiftedEvent> a, b;
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
        const auto expected = oracles::sift_oracle(a, b);
        const auto actual = sift(a, b);
        REQUIRE(actual.symbols_a == expected.symbols_a);
        REQUIRE(actual.symbols_b == expected.symbols_b);
    }
}

TEST_CASE("key metrics: qber edges and rkr formula") {
    KeyBatch all_equal;
    for (int i = 0; i < 500; ++i) {
        all_equal.symbols_a.push_back(static_cast<std::uint16_t>(i % 64));
        all_equal.symbols_b.push_back(static_cast<std::uint16_t>(i % 64));
        all_equal.frames.push_back(i);
    }
    all_equal.is_check.assign(500, 0);
    const auto km = key_metrics(all_equal, 5.0, 6);
    CHECK(km.qber == 0.0);
    CHECK(km.rkr_bps == doctest::Approx(6.0 * 500.0 / 5.0));

    // Uniform random Bob: expected qber -> 1 - 2^-D.
    Rng rng = make_rng(1);
    KeyBatch random_b;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        random_b.symbols_a.push_back(static_cast<std::uint16_t>(rng.uniform_below(64)));
        random_b.symbols_b.push_back(static_cast<std::uint16_t>(rng.uniform_below(64)));
        random_b.frames.push_back(i);
    }
    random_b.is_check.assign(n, 0);
    const auto km2 = key_metrics(random_b, 1.0, 6);
    const double expected = 1.0 - 1.0 / 64.0;
    CHECK(std::fabs(km2.qber - expected) < 5.0 * std::sqrt(expected * (1 - expected) / n));

    KeyBatch empty;
    CHECK_THROWS_AS(key_metrics(empty, 1.0, 6), std::invalid_argument);
}

TEST_CASE("simulated QBER matches the Gaussian escape-mass oracle") {
    // Timing-error-only channel, no accidentals: Bob sees Alice's event plus
    // N(0, sigma). 3-sigma binomial agreement against numerical integration.
    const EncodingParams enc{6, 3, 110, 0};
    for (double sigma : {30.0, 50.0, 83.6 / 2.3548, 2.0 * 83.6 / 2.3548, 120.0}) {
        const auto oracle = oracles::qber_timing_oracle(sigma, enc);
        Rng rng = make_rng(900 + static_cast<std::uint64_t>(sigma));
        const int n_pairs = 40000;
        std::vector<SiftedEvent> ea, eb;
        std::vector<Instant> ta, tb;
        const Instant frame_len = enc.frame_length_ps();
        for (int i = 0; i < n_pairs; ++i) {
            const Instant frame = static_cast<Instant>(i) * 3;  // sparse frames
            const Instant pos = static_cast<Instant>(rng.uniform_below(
                static_cast<std::uint64_t>(frame_len)));
            const Instant alice = frame * frame_len + pos;
            const Instant bob = alice + static_cast<Instant>(std::llround(rng.gaussian(0.0, sigma)));
            ta.push_back(alice);
            if (bob >= 0) tb.push_back(bob);
        }
        std::sort(tb.begin(), tb.end());
        ea = assign_bins(ta, enc);
        eb = assign_bins(tb, enc);
        KeyBatch batch = sift(ea, eb);
        REQUIRE(batch.pair_count() > 1000);
        const auto km = key_metrics(batch, 1.0, enc.dimension_exp);

        const double kept = static_cast<double>(batch.pair_count());
        const double q_se = std::sqrt(oracle.qber * (1.0 - oracle.qber) / kept);
        CHECK(std::fabs(km.qber - oracle.qber) <= 3.0 * q_se + 1e-9);

        const double keep_se =
            std::sqrt(oracle.p_keep * (1.0 - oracle.p_keep) / static_cast<double>(n_pairs));
        CHECK(std::fabs(kept / n_pairs - oracle.p_keep) <= 4.0 * keep_se);
    }
}

TEST_CASE("expected QBER is monotone in the timing error width") {
    const EncodingParams enc{6, 3, 110, 0};
    double last = -1.0;
    for (double sigma : {10.0, 25.0, 40.0, 60.0, 90.0, 130.0}) {
        const double q = oracles::qber_timing_oracle(sigma, enc).qber;
        CHECK(q >= last);
        last = q;
    }

    // And the simulated QBER tracks it (statistical, generous slack).
    double last_sim = -0.005;
    for (double sigma : {20.0, 60.0, 120.0}) {
        Rng rng = make_rng(1234 + static_cast<std::uint64_t>(sigma));
        std::vector<Instant> ta, tb;
        const Instant frame_len = enc.frame_length_ps();
        for (int i = 0; i < 30000; ++i) {
            const Instant alice = static_cast<Instant>(i) * 3 * frame_len +
                                  static_cast<Instant>(rng.uniform_below(
                                      static_cast<std::uint64_t>(frame_len)));
            ta.push_back(alice);
            tb.push_back(alice + static_cast<Instant>(std::llround(rng.gaussian(0.0, sigma))));
        }
        std::sort(tb.begin(), tb.end());
        KeyBatch batch = sift(assign_bins(ta, enc), assign_bins(tb, enc));
        const auto km = key_metrics(batch, 1.0, enc.dimension_exp);
        CHECK(km.qber >= last_sim - 0.004);
        last_sim = km.qber;
    }
}

TEST_CASE("mutual information edges and closed form") {
    // Perfect correlation, uniform over 64 slots: exactly 6 bits.
    JointHistogram perfect(64);
    for (std::size_t s = 0; s < 64; ++s)
        for (int k = 0; k < 100; ++k) perfect.add(s, s);
    CHECK(mutual_information(perfect) == doctest::Approx(6.0).epsilon(1e-12));

    // Independent marginals: 0 bits up to plug-in bias, ~ (d-1)^2/(2 n ln 2).
    Rng rng = make_rng(2);
    JointHistogram indep(64);
    const int n = 2000000;
    for (int i = 0; i < n; ++i)
        indep.add(rng.uniform_below(64), rng.uniform_below(64));
    const double bias_bound = 3.0 * (63.0 * 63.0) / (2.0 * n * std::log(2.0));
    CHECK(mutual_information(indep) <= bias_bound);

    // Symmetric confusion: p split equally to the two adjacent slots (cyclic):
    // MI = D - H(1-p, p/2, p/2) exactly, by construction of the counts
    // (980 correct and 10 to each neighbor per row).
    const int per_row = 1000;
    const double p = 0.02;
    JointHistogram exact(64);
    for (std::size_t s = 0; s < 64; ++s) {
        for (int k = 0; k < per_row - 20; ++k) exact.add(s, s);
        for (int k = 0; k < 10; ++k) exact.add(s, (s + 1) % 64);
        for (int k = 0; k < 10; ++k) exact.add(s, (s + 63) % 64);
    }
    const double h_cond = -(1.0 - p) * std::log2(1.0 - p) - p * std::log2(p / 2.0);
    CHECK(mutual_information(exact) == doctest::Approx(6.0 - h_cond).epsilon(1e-9));
}

TEST_CASE("finite-size penalty is strictly decreasing and vanishes") {
    double last = 1e9;
    for (std::uint64_t n : {1000ull, 10000ull, 100000ull, 300000ull, 10000000ull, 100000000ull}) {
        const double d = finite_size_penalty(n, 1e-9, 1e-9);
        CHECK(d < last);
        last = d;
    }
    CHECK(finite_size_penalty(100000000ull, 1e-9, 1e-9) < 0.01);
}

TEST_CASE("security analysis invariants and trivial case") {
    KeyBatch batch;
    const int n = 6400;  // exactly uniform over 64 slots -> I(A;B) = 6 bits
    for (int i = 0; i < n; ++i) {
        const auto s = static_cast<std::uint16_t>(i % 64);
        batch.symbols_a.push_back(s);
        batch.symbols_b.push_back(s);
        batch.frames.push_back(i);
    }
    batch.is_check.assign(n, 0);
    (void)key_metrics(batch, 5.0, 6);

    SecurityParams params;
    params.beta = 0.9;
    params.chi_of_ratio = [](double) { return 0.0; };  // chi = 0 for the identity check

    SecurityReport r = security_analysis(batch, params, {35.5, 35.5}, 6);
    CHECK(r.i_ab == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(r.chi_ae == 0.0);
    // delta_i = beta * i_ab - delta_fk here; delta_fk is small but nonzero.
    CHECK(r.delta_i == doctest::Approx(0.9 * 6.0 - r.delta_fk).epsilon(1e-12));
    CHECK(r.skr_bps == doctest::Approx(r.delta_i * (n / 5.0) * params.key_fraction).epsilon(1e-12));

    // Measured below baseline: model violation flag, chi clamped at zero.
    SecurityParams defaults;
    SecurityReport v = security_analysis(batch, defaults, {35.5, 30.0}, 6);
    CHECK(v.model_violation);
    CHECK(v.chi_ae == 0.0);

    KeyBatch tiny;
    tiny.symbols_a.assign(10, 1);
    tiny.symbols_b.assign(10, 1);
    tiny.frames.assign(10, 0);
    tiny.is_check.assign(10, 0);
    tiny.duration_s = 1.0;
    CHECK_THROWS_AS(security_analysis(tiny, defaults, {35.5, 35.5}, 6), std::invalid_argument);
}

TEST_CASE("delta_i at n = 1e8 is within 1% of the asymptotic value") {
    const SecurityParams params;
    const double i_ab = 5.4, chi = 1.2;
    const double asymptotic = params.beta * i_ab - chi;
    const double finite = params.beta * i_ab - chi - finite_size_penalty(100000000ull, params.eps_bar, params.eps_pa);
    CHECK(std::fabs(finite - asymptotic) / asymptotic < 0.01);
}

TEST_CASE("holevo g and the default excess-noise model") {
    CHECK(holevo_g(0.0) == 0.0);
    CHECK(holevo_g(1.0) == doctest::Approx(2.0));
    CHECK(gaussian_excess_chi(-0.5, 1.8) == 0.0);
    CHECK(gaussian_excess_chi(0.0, 1.8) == 0.0);
    CHECK(gaussian_excess_chi(0.2, 1.8) > 0.0);
    // Monotone in the excess ratio.
    double last = -1.0;
    for (double r : {0.0, 0.1, 0.2, 0.4, 0.8}) {
        const double c = gaussian_excess_chi(r, 1.8);
        CHECK(c >= last);
        last = c;
    }
}

TEST_CASE("split_batch is deterministic and near the requested fraction") {
    KeyBatch batch;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        batch.symbols_a.push_back(1);
        batch.symbols_b.push_back(1);
        batch.frames.push_back(i);
    }
    batch.is_check.assign(n, 0);
    split_batch(batch, 0.7, 12345);
    std::size_t checks = 0;
    for (auto c : batch.is_check) checks += c;
    CHECK(std::fabs(static_cast<double>(n - checks) / n - 0.7) < 0.01);

    KeyBatch again = batch;
    split_batch(again, 0.7, 12345);
    CHECK(again.is_check == batch.is_check);
}

TEST_CASE("optimizer: single candidate, tie-breaks, cap violation flag") {
    // Synthetic streams: perfectly correlated events on a 110 ps grid.
    Rng rng = make_rng(4);
    std::vector<Instant> ta, tb;
    const EncodingParams ref{6, 3, 110, 0};
    const Instant frame_len = ref.frame_length_ps();
    for (int i = 0; i < 8000; ++i) {
        const Instant alice = static_cast<Instant>(i) * 2 * frame_len +
                              static_cast<Instant>(rng.uniform_below(
                                  static_cast<std::uint64_t>(frame_len)));
        ta.push_back(alice);
        tb.push_back(alice + static_cast<Instant>(std::llround(rng.gaussian(0.0, 20.0))));
    }
    std::sort(tb.begin(), tb.end());

    SecurityParams params;
    const BaselineWidths widths{35.5, 35.5};

    const EncodingParams only{6, 3, 110, 0};
    auto res = optimize_encoding(std::vector<EncodingParams>{only}, 0.05, ta, tb, 16.0, params,
                                 widths, 99);
    CHECK(res.best.bin_width_ps == 110);
    CHECK_FALSE(res.cap_violated);

    // A timing error wide enough to force slot escapes violates a tight cap;
    // the flag is set and the best-QBER candidate is still returned.
    Rng noisy_rng = make_rng(5);
    std::vector<Instant> tb_noisy;
    for (Instant t : ta)
        tb_noisy.push_back(t + static_cast<Instant>(std::llround(noisy_rng.gaussian(0.0, 220.0))));
    std::sort(tb_noisy.begin(), tb_noisy.end());
    auto violated = optimize_encoding(std::vector<EncodingParams>{only}, 1e-9, ta, tb_noisy, 16.0,
                                      params, widths, 99);
    CHECK(violated.cap_violated);
    CHECK(violated.best.bin_width_ps == 110);

    CHECK_THROWS_AS(optimize_encoding(std::vector<EncodingParams>{}, 0.05, ta, tb, 16.0, params,
                                      widths, 99),
                    std::invalid_argument);
}

TEST_CASE("normalize_scan anchors at tau = 0") {
    const std::vector<double> taus{0.0, 60.0, 120.0};
    const std::vector<double> skr{100.0, 50.0, 10.0};
    const auto points = normalize_scan(taus, skr);
    CHECK(points[0].normalized_skr == 1.0);
    CHECK(points[1].normalized_skr == 0.5);
    CHECK(points[2].normalized_skr == doctest::Approx(0.1));

    const std::vector<double> no_anchor{10.0, 20.0};
    const std::vector<double> skr2{1.0, 2.0};
    CHECK_THROWS_AS(normalize_scan(no_anchor, skr2), std::invalid_argument);

    const std::vector<double> zero_skr{0.0, 1.0};
    const std::vector<double> taus2{0.0, 10.0};
    CHECK_THROWS_AS(normalize_scan(taus2, zero_skr), std::runtime_error);
}
