#include "qnet/qtwtt.hpp"

#include <cmath>
#include <stdexcept>

namespace qnet::qtwtt {

TwttMeasurement extract_offsets(const coincidence::PeakFit& fit_ab,
                                const coincidence::PeakFit& fit_ba, int epoch_index) {
    TwttMeasurement m;
    m.epoch_index = epoch_index;
    m.t1_ps = fit_ab.center_ps;
    m.t2_ps = fit_ba.center_ps;
    m.t0_ps = (m.t1_ps - m.t2_ps) / 2.0;
    m.link_delay_ps = (m.t1_ps + m.t2_ps) / 2.0;
    m.t0_uncertainty_ps = 0.5 * std::sqrt(fit_ab.center_uncertainty_ps * fit_ab.center_uncertainty_ps +
                                          fit_ba.center_uncertainty_ps * fit_ba.center_uncertainty_ps);
    m.valid = true;
    return m;
}

ServoState servo_update(const ServoState& state, const TwttMeasurement& m) {
    ServoState next = state;
    if (m.valid) next.accumulated_correction_ps += state.gain * m.t0_ps;
    return next;  // fit-failure epochs hold the previous correction
}

double corrected_arrival_time(double bob_reference_ps, double link_delay_est_ps) {
    return bob_reference_ps + link_delay_est_ps;
}

StabilityReport stability_report(std::span<const TwttMeasurement> measurements,
                                 double epoch_period_s) {
    std::vector<double> offsets;
    offsets.reserve(measurements.size());
    for (const auto& m : measurements)
        if (m.valid) offsets.push_back(m.t0_ps);
    if (offsets.size() < 30)
        throw InsufficientSamples("stability_report: need at least 30 valid epochs");

    StabilityReport r;
    r.tdev_curve = tdev_curve(offsets, epoch_period_s);
    r.offset_std_ps = stddev(offsets);
    return r;
}

}  // namespace qnet::qtwtt
