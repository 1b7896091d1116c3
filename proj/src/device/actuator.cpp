#include <algorithm>
#include <cmath>

#include "sumlab/device/device.hpp"

namespace sumlab {

ActuatorState step_actuator(ActuatorState s, const ActuatorParams& p, const PdGains& g, double dt) {
    const double vmax = p.max_speed_mm_s;
    const double command = std::clamp(g.kp * (s.target_mm - s.position_mm) - g.kd * s.velocity_mm_s, -vmax, vmax);
    const double alpha = std::min(1.0, dt / p.time_constant_s);
    s.velocity_mm_s = std::clamp(s.velocity_mm_s + (command - s.velocity_mm_s) * alpha, -vmax, vmax);
    s.position_mm += s.velocity_mm_s * dt;
    if (s.position_mm >= p.stroke_mm) {
        s.position_mm = p.stroke_mm;
        s.velocity_mm_s = std::min(0.0, s.velocity_mm_s);
    } else if (s.position_mm <= 0.0) {
        s.position_mm = 0.0;
        s.velocity_mm_s = std::max(0.0, s.velocity_mm_s);
    }
    return s;
}

double tissue_force(const TissueParams& t, double site_factor, double position_mm) {
    const double d = position_mm - t.contact_offset_mm;
    if (d <= 0.0) return 0.0;
    return site_factor * (t.linear_stiffness_n_per_mm * d + t.cubic_coeff_n_per_mm3 * d * d * d);
}

double sensor_reading(const SensorParams& sensor, double force_n) {
    const double clipped = std::clamp(force_n, 0.0, sensor.range_n);
    const double quantised = std::round(clipped / sensor.resolution_n) * sensor.resolution_n;
    return std::clamp(quantised, 0.0, sensor.range_n);
}

}  // namespace sumlab
