#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qnet/timebase.hpp"

namespace qnet::channel {

enum class Direction : std::uint8_t { forward = 0, backward = 1 };

enum class DriftShape : std::uint8_t { none = 0, sinusoid = 1, random_walk = 2 };

/// Slow delay drift. amplitude_ps is the peak-to-peak excursion; the sinusoid
/// reaches it over half a period starting from the base delay.
struct DriftSpec {
    DriftShape shape = DriftShape::none;
    double amplitude_ps = 0.0;
    double period_s = 3600.0;
};

/// Asymmetric delay attack: adds tau_eve_ps to one direction only.
struct AttackParams {
    double tau_eve_ps = 0.0;
    Direction direction = Direction::forward;
};

/// Bidirectional fiber model. Both directions see the same delay(t) when no
/// attack is active (the two-way symmetry premise).
class LinkState {
public:
    LinkState() = default;
    LinkState(Instant base_delay_ps, DriftSpec drift, double loss_transmittance,
              double residual_broadening_sigma_ps, std::uint64_t seed, double span_s = 86400.0);

    /// One-way delay in ps at true time t (seconds from origin).
    double delay_at(double t_s) const;

    Instant base_delay_ps() const { return base_delay_ps_; }
    double loss_transmittance() const { return loss_transmittance_; }
    double residual_broadening_sigma_ps() const { return residual_broadening_sigma_ps_; }
    const DriftSpec& drift() const { return drift_; }

private:
    Instant base_delay_ps_ = 0;
    DriftSpec drift_;
    double loss_transmittance_ = 1.0;
    double residual_broadening_sigma_ps_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<double> walk_table_;  // 1 s grid, random-walk shape only
};

/// Propagate sorted true-time events through the link in one direction:
/// delay(t) + attack delay when the attack direction matches + Gaussian
/// broadening, with survivors kept at probability loss_transmittance.
/// Output re-sorted. Attack and loss draws are independent, so the same seed
/// yields the same survivor set for every tau_eve.
std::vector<Instant> propagate(std::span<const Instant> times, const LinkState& link,
                               const std::optional<AttackParams>& attack, Direction direction,
                               Rng& rng);

std::vector<TimeTag> propagate(std::span<const TimeTag> tags, const LinkState& link,
                               const std::optional<AttackParams>& attack, Direction direction,
                               Rng& rng);

}  // namespace qnet::channel
