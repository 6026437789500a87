#include "qnet/doqkd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qnet::doqkd {

void EncodingParams::validate() const {
    if (dimension_exp < 1 || dimension_exp > 15)
        throw std::invalid_argument("EncodingParams: D must be in [1,15]");
    if (bins_per_slot < 1) throw std::invalid_argument("EncodingParams: I must be >= 1");
    if (bin_width_ps < 1) throw std::invalid_argument("EncodingParams: bin width must be >= 1 ps");
}

SiftedEvent assign_one(Instant t, const EncodingParams& enc) {
    const Instant rel = instant_sub(t, enc.frame_origin_ps);
    if (rel < 0) throw std::invalid_argument("assign_bins: tag before frame origin");
    const Instant frame_len = enc.frame_length_ps();
    const Instant slot_w = enc.slot_width_ps();
    SiftedEvent e;
    e.frame_no = rel / frame_len;
    const Instant in_frame = rel % frame_len;
    e.slot_no = static_cast<std::uint32_t>(in_frame / slot_w);
    e.bin_no = static_cast<std::uint32_t>((in_frame % slot_w) / enc.bin_width_ps);
    return e;
}

std::vector<SiftedEvent> assign_bins(std::span<const Instant> tags, const EncodingParams& enc) {
    enc.validate();
    std::vector<SiftedEvent> out;
    out.reserve(tags.size());
    for (Instant t : tags) out.push_back(assign_one(t, enc));
    return out;
}

namespace {

// Lone events per frame: second == false marks frames seen more than once.
struct LoneEvent {
    SiftedEvent event;
    bool lone;
};

// Input is frame-sorted; collapse to (frame -> lone event or multi marker).
std::vector<LoneEvent> lone_events(std::span<const SiftedEvent> events) {
    std::vector<LoneEvent> out;
    out.reserve(events.size());
    for (std::size_t i = 0; i < events.size();) {
        std::size_t j = i;
        while (j < events.size() && events[j].frame_no == events[i].frame_no) ++j;
        out.push_back({events[i], j - i == 1});
        i = j;
    }
    return out;
}

}  // namespace

KeyBatch sift(std::span<const SiftedEvent> alice, std::span<const SiftedEvent> bob) {
    auto frame_sorted = [](std::span<const SiftedEvent> v) {
        return std::is_sorted(v.begin(), v.end(), [](const SiftedEvent& a, const SiftedEvent& b) {
            return a.frame_no < b.frame_no;
        });
    };
    if (!frame_sorted(alice) || !frame_sorted(bob))
        throw std::invalid_argument("sift: inputs must be frame-sorted");

    const std::vector<LoneEvent> la = lone_events(alice);
    const std::vector<LoneEvent> lb = lone_events(bob);

    KeyBatch batch;
    std::size_t ia = 0, ib = 0;
    while (ia < la.size() && ib < lb.size()) {
        const std::int64_t fa = la[ia].event.frame_no;
        const std::int64_t fb = lb[ib].event.frame_no;
        if (fa < fb) {
            ++ia;
        } else if (fb < fa) {
            ++ib;
        } else {
            if (la[ia].lone && lb[ib].lone && la[ia].event.bin_no == lb[ib].event.bin_no) {
                batch.symbols_a.push_back(static_cast<std::uint16_t>(la[ia].event.slot_no));
                batch.symbols_b.push_back(static_cast<std::uint16_t>(lb[ib].event.slot_no));
                batch.frames.push_back(fa);
            }
            ++ia;
            ++ib;
        }
    }
    batch.is_check.assign(batch.pair_count(), 0);
    return batch;
}

void split_batch(KeyBatch& batch, double key_fraction, std::uint64_t salt) {
    batch.is_check.assign(batch.pair_count(), 0);
    for (std::size_t i = 0; i < batch.pair_count(); ++i) {
        const std::uint64_t h = mix64(static_cast<std::uint64_t>(batch.frames[i]) ^ salt);
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        if (u >= key_fraction) batch.is_check[i] = 1;
    }
}

KeyMetrics key_metrics(KeyBatch& batch, double duration_s, int dimension_exp) {
    if (batch.pair_count() == 0) throw std::invalid_argument("key_metrics: empty batch");
    if (!(duration_s > 0.0)) throw std::invalid_argument("key_metrics: duration must be > 0");
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < batch.pair_count(); ++i)
        if (batch.symbols_a[i] != batch.symbols_b[i]) ++mismatches;
    KeyMetrics m;
    m.qber = static_cast<double>(mismatches) / static_cast<double>(batch.pair_count());
    m.rkr_bps = static_cast<double>(dimension_exp) * static_cast<double>(batch.pair_count()) / duration_s;
    batch.qber = m.qber;
    batch.rkr_bps = m.rkr_bps;
    batch.duration_s = duration_s;
    return m;
}

std::uint64_t JointHistogram::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

double mutual_information(const JointHistogram& joint) {
    const std::uint64_t total = joint.total();
    if (total == 0) throw std::invalid_argument("mutual_information: empty joint histogram");
    const std::size_t d = joint.dim();
    std::vector<double> pa(d, 0.0), pb(d, 0.0);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            const double p = static_cast<double>(joint.at(a, b)) / static_cast<double>(total);
            pa[a] += p;
            pb[b] += p;
        }
    double mi = 0.0;
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            if (joint.at(a, b) == 0) continue;
            const double p = static_cast<double>(joint.at(a, b)) / static_cast<double>(total);
            mi += p * std::log2(p / (pa[a] * pb[b]));
        }
    return std::max(mi, 0.0);
}

double holevo_g(double nbar) {
    if (nbar <= 0.0) return 0.0;
    return (nbar + 1.0) * std::log2(nbar + 1.0) - nbar * std::log2(nbar);
}

double gaussian_excess_chi(double excess_ratio, double chi_scale) {
    return holevo_g(chi_scale * std::max(0.0, excess_ratio));
}

double finite_size_penalty(std::uint64_t n, double eps_bar, double eps_pa) {
    if (n == 0) throw std::invalid_argument("finite_size_penalty: n must be > 0");
    const double root_n = std::sqrt(static_cast<double>(n));
    return (7.0 * std::sqrt(std::log2(2.0 / eps_bar)) + 2.0 * std::log2(1.0 / eps_pa)) / root_n;
}

SecurityReport security_analysis(const KeyBatch& batch, const SecurityParams& params,
                                 const BaselineWidths& widths, int dimension_exp) {
    if (batch.pair_count() < 1000)
        throw std::invalid_argument("security_analysis: need at least 1000 pairs");
    if (!(batch.duration_s > 0.0))
        throw std::invalid_argument("security_analysis: batch has no duration (run key_metrics)");

    const std::size_t dim = std::size_t{1} << dimension_exp;
    JointHistogram joint(dim);
    std::size_t checks = 0;
    for (std::size_t i = 0; i < batch.pair_count(); ++i) {
        if (!batch.is_check[i]) continue;
        joint.add(batch.symbols_a[i], batch.symbols_b[i]);
        ++checks;
    }
    // Without a split every pair is disclosed for estimation.
    if (checks == 0)
        for (std::size_t i = 0; i < batch.pair_count(); ++i)
            joint.add(batch.symbols_a[i], batch.symbols_b[i]);

    SecurityReport r;
    r.n = batch.pair_count();
    r.i_ab = mutual_information(joint);

    double ratio = 0.0;
    if (widths.baseline_sigma_ps > 0.0) {
        const double vr = (widths.measured_sigma_ps * widths.measured_sigma_ps) /
                          (widths.baseline_sigma_ps * widths.baseline_sigma_ps);
        ratio = vr - 1.0;
        if (ratio < 0.0) {
            r.model_violation = true;  // measured below baseline: clamp chi at 0
            ratio = 0.0;
        }
    }
    r.chi_ae = params.chi_of_ratio ? params.chi_of_ratio(ratio)
                                   : gaussian_excess_chi(ratio, params.chi_scale);
    r.delta_fk = finite_size_penalty(r.n, params.eps_bar, params.eps_pa);
    r.delta_i = std::max(0.0, params.beta * r.i_ab - r.chi_ae - r.delta_fk);
    const double coincidence_rate = static_cast<double>(r.n) / batch.duration_s;
    r.skr_bps = r.delta_i * coincidence_rate * params.key_fraction;
    return r;
}

OptimizationResult optimize_encoding(std::span<const EncodingParams> candidates, double qber_cap,
                                     std::span<const Instant> alice_tags,
                                     std::span<const Instant> bob_tags, double duration_s,
                                     const SecurityParams& params, const BaselineWidths& widths,
                                     std::uint64_t split_salt) {
    if (candidates.empty()) throw std::invalid_argument("optimize_encoding: empty candidate grid");

    OptimizationResult result;
    result.table.reserve(candidates.size());
    for (const EncodingParams& enc : candidates) {
        CandidateResult c;
        c.enc = enc;
        const auto ev_a = assign_bins(alice_tags, enc);
        const auto ev_b = assign_bins(bob_tags, enc);
        KeyBatch batch = sift(ev_a, ev_b);
        c.pairs = batch.pair_count();
        if (c.pairs > 0) {
            split_batch(batch, params.key_fraction, split_salt);
            const KeyMetrics km = key_metrics(batch, duration_s, enc.dimension_exp);
            c.qber = km.qber;
            c.rkr_bps = km.rkr_bps;
            if (c.pairs >= 1000)
                c.skr_bps = security_analysis(batch, params, widths, enc.dimension_exp).skr_bps;
        } else {
            c.qber = 1.0;
        }
        result.table.push_back(c);
    }

    auto tie_before = [](const EncodingParams& x, const EncodingParams& y) {
        if (x.dimension_exp != y.dimension_exp) return x.dimension_exp < y.dimension_exp;
        if (x.bins_per_slot != y.bins_per_slot) return x.bins_per_slot < y.bins_per_slot;
        return x.bin_width_ps < y.bin_width_ps;
    };

    const CandidateResult* best = nullptr;
    for (const auto& c : result.table) {
        if (c.qber > qber_cap) continue;
        if (!best || c.skr_bps > best->skr_bps ||
            (c.skr_bps == best->skr_bps && tie_before(c.enc, best->enc)))
            best = &c;
    }
    if (!best) {
        result.cap_violated = true;
        for (const auto& c : result.table)
            if (!best || c.qber < best->qber ||
                (c.qber == best->qber && tie_before(c.enc, best->enc)))
                best = &c;
    }
    result.best = best->enc;
    return result;
}

std::vector<ScanPoint> normalize_scan(std::span<const double> tau_list,
                                      std::span<const double> skr_values) {
    if (tau_list.size() != skr_values.size())
        throw std::invalid_argument("normalize_scan: size mismatch");
    double anchor = -1.0;
    for (std::size_t i = 0; i < tau_list.size(); ++i)
        if (tau_list[i] == 0.0) anchor = skr_values[i];
    if (anchor < 0.0)
        throw std::invalid_argument("normalize_scan: tau list must include the 0 anchor");
    if (!(anchor > 0.0)) throw std::runtime_error("normalize_scan: SKR(0) <= 0, scan aborted");

    std::vector<ScanPoint> out;
    out.reserve(tau_list.size());
    for (std::size_t i = 0; i < tau_list.size(); ++i)
        out.push_back({tau_list[i], skr_values[i], skr_values[i] / anchor});
    return out;
}

}  // namespace qnet::doqkd
