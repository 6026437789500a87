#include "qnet/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qnet::channel {

LinkState::LinkState(Instant base_delay_ps, DriftSpec drift, double loss_transmittance,
                     double residual_broadening_sigma_ps, std::uint64_t seed, double span_s)
    : base_delay_ps_(base_delay_ps),
      drift_(drift),
      loss_transmittance_(loss_transmittance),
      residual_broadening_sigma_ps_(residual_broadening_sigma_ps),
      seed_(seed) {
    if (base_delay_ps < 0) throw std::invalid_argument("LinkState: base delay must be >= 0");
    if (loss_transmittance < 0.0 || loss_transmittance > 1.0)
        throw std::invalid_argument("LinkState: transmittance outside [0,1]");
    if (residual_broadening_sigma_ps < 0.0)
        throw std::invalid_argument("LinkState: broadening sigma must be >= 0");
    if (drift_.shape == DriftShape::random_walk && drift_.amplitude_ps > 0.0) {
        const std::size_t n = static_cast<std::size_t>(std::ceil(span_s)) + 2;
        // Step size scaled so the walk's RMS excursion over one period is
        // about half the configured peak-to-peak amplitude.
        const double steps_per_period = std::max(1.0, drift_.period_s);
        const double step_sigma = 0.5 * drift_.amplitude_ps / std::sqrt(steps_per_period);
        Rng rng = make_rng(mix64(seed_ ^ 0x11aaccull));
        walk_table_.assign(n, 0.0);
        for (std::size_t i = 1; i < n; ++i)
            walk_table_[i] = walk_table_[i - 1] + rng.gaussian(0.0, step_sigma);
        const double low = *std::min_element(walk_table_.begin(), walk_table_.end());
        if (static_cast<double>(base_delay_ps_) + low <= 0.0)
            for (auto& w : walk_table_) w -= low - 1.0;
    }
}

double LinkState::delay_at(double t_s) const {
    const double base = static_cast<double>(base_delay_ps_);
    switch (drift_.shape) {
        case DriftShape::none:
            return base;
        case DriftShape::sinusoid: {
            if (drift_.amplitude_ps == 0.0) return base;
            const double phase = 2.0 * M_PI * t_s / drift_.period_s;
            return base + 0.5 * drift_.amplitude_ps * (1.0 - std::cos(phase));
        }
        case DriftShape::random_walk: {
            if (walk_table_.empty()) return base;
            const double idx =
                std::clamp(t_s, 0.0, static_cast<double>(walk_table_.size() - 2));
            const std::size_t i = static_cast<std::size_t>(idx);
            const double f = idx - static_cast<double>(i);
            return base + walk_table_[i] * (1.0 - f) + walk_table_[i + 1] * f;
        }
    }
    return base;
}

std::vector<Instant> propagate(std::span<const Instant> times, const LinkState& link,
                               const std::optional<AttackParams>& attack, Direction direction,
                               Rng& rng) {
    if (!std::is_sorted(times.begin(), times.end()))
        throw std::invalid_argument("propagate: input must be sorted");

    const double attack_delay =
        (attack && attack->direction == direction) ? attack->tau_eve_ps : 0.0;
    const double sigma = link.residual_broadening_sigma_ps();
    const double p = link.loss_transmittance();

    Rng loss_rng = rng.fork(0x10cc, static_cast<std::uint64_t>(direction));
    Rng broad_rng = rng.fork(0xb40a, static_cast<std::uint64_t>(direction));

    std::vector<Instant> out;
    out.reserve(static_cast<std::size_t>(static_cast<double>(times.size()) * p) + 16);
    for (Instant t : times) {
        // One loss draw and one broadening draw per input event, regardless of
        // the attack setting, so survivor sets match across tau_eve values.
        const bool kept = p >= 1.0 || loss_rng.bernoulli(p);
        const double broadening = sigma > 0.0 ? broad_rng.gaussian(0.0, sigma) : 0.0;
        if (!kept) continue;
        const double delay = link.delay_at(to_seconds(t)) + attack_delay + broadening;
        out.push_back(instant_add(t, static_cast<Instant>(std::llround(delay))));
    }
    if (sigma > 0.0) std::sort(out.begin(), out.end());
    return out;
}

std::vector<TimeTag> propagate(std::span<const TimeTag> tags, const LinkState& link,
                               const std::optional<AttackParams>& attack, Direction direction,
                               Rng& rng) {
    std::vector<Instant> times = times_of(tags);
    // Loss must thin tags and times identically: replay the same draws.
    const double attack_delay =
        (attack && attack->direction == direction) ? attack->tau_eve_ps : 0.0;
    const double sigma = link.residual_broadening_sigma_ps();
    const double p = link.loss_transmittance();
    Rng loss_rng = rng.fork(0x10cc, static_cast<std::uint64_t>(direction));
    Rng broad_rng = rng.fork(0xb40a, static_cast<std::uint64_t>(direction));

    std::vector<TimeTag> out;
    out.reserve(tags.size());
    for (const TimeTag& tag : tags) {
        const bool kept = p >= 1.0 || loss_rng.bernoulli(p);
        const double broadening = sigma > 0.0 ? broad_rng.gaussian(0.0, sigma) : 0.0;
        if (!kept) continue;
        const double delay = link.delay_at(to_seconds(tag.t)) + attack_delay + broadening;
        out.push_back({instant_add(tag.t, static_cast<Instant>(std::llround(delay))),
                       tag.detector, tag.node});
    }
    if (sigma > 0.0)
        std::sort(out.begin(), out.end(), [](const TimeTag& a, const TimeTag& b) { return a.t < b.t; });
    return out;
}

}  // namespace qnet::channel
