#pragma once

#include <span>
#include <vector>

#include "qnet/coincidence.hpp"
#include "qnet/timebase.hpp"

namespace qnet::qtwtt {

/// One epoch's two-way result. t1 is the A->B peak (t_1B - t_1A), t2 the
/// B->A peak (t_2A - t_2B); the half-difference is the clock offset and the
/// half-sum the link delay, exactly by construction.
struct TwttMeasurement {
    int epoch_index = 0;
    double t1_ps = 0.0;
    double t2_ps = 0.0;
    double t0_ps = 0.0;
    double link_delay_ps = 0.0;
    double t0_uncertainty_ps = 0.0;
    bool valid = false;
};

TwttMeasurement extract_offsets(const coincidence::PeakFit& fit_ab,
                                const coincidence::PeakFit& fit_ba, int epoch_index);

/// Proportional servo trimming Bob's clock. gain = 1 is deadbeat: each epoch's
/// offset estimate is an unbiased direct measurement.
struct ServoState {
    double accumulated_correction_ps = 0.0;
    double gain = 1.0;
    double epoch_period_s = 5.0;
};

ServoState servo_update(const ServoState& state, const TwttMeasurement& m);

/// Expected Bob-side arrival time of a photon launched at Alice reference
/// time: t''_B + tau''_link. The attack-induced halves cancel, so the result
/// is independent of tau_eve in the noiseless model.
double corrected_arrival_time(double bob_reference_ps, double link_delay_est_ps);

struct StabilityReport {
    std::vector<TdevPoint> tdev_curve;
    double offset_std_ps = 0.0;
};

/// TDEV curve and standard deviation of the offset series. Requires >= 30
/// valid epochs.
StabilityReport stability_report(std::span<const TwttMeasurement> measurements,
                                 double epoch_period_s);

}  // namespace qnet::qtwtt
