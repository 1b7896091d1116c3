#pragma once

#include <vector>

namespace sumlab {

struct PdGains {
    double kp = 25.0;   // 1/s: commanded speed per mm of position error
    double kd = 0.02;   // s: damping on measured velocity

    friend bool operator==(const PdGains&, const PdGains&) = default;
};

/// Position-controlled linear actuator. The controller is PD on position,
/// producing a speed command that the motor follows with a first-order lag
/// and a hard speed limit.
struct ActuatorParams {
    double stroke_mm = 20.0;
    double max_speed_mm_s = 15.0;
    double time_constant_s = 0.02;
    int tick_rate_hz = 1000;

    friend bool operator==(const ActuatorParams&, const ActuatorParams&) = default;
};

/// Tissue reaction force at indentation d = position - contact_offset:
/// F = site_factor * (linear * d + cubic * d^3) for d > 0, else 0.
struct TissueParams {
    double contact_offset_mm = 0.0;
    double linear_stiffness_n_per_mm = 4.3 / 10.4;
    double cubic_coeff_n_per_mm3 = 0.0;

    friend bool operator==(const TissueParams&, const TissueParams&) = default;
};

struct SensorParams {
    double range_n = 45.0;
    double resolution_n = 0.05;
    double noise_sd_n = 0.05;

    friend bool operator==(const SensorParams&, const SensorParams&) = default;
};

/// Placement of the tactors. Stored only; sites are mechanically independent.
struct TactorGeometry {
    double tactor_diameter_mm = 15.0;
    double edge_gap_mm = 6.0;

    friend bool operator==(const TactorGeometry&, const TactorGeometry&) = default;
};

struct DeviceParams {
    int channels = 2;
    ActuatorParams actuator;
    std::vector<PdGains> gains;          // per channel; missing entries use defaults
    TissueParams tissue;
    std::vector<double> site_factors;    // per channel stiffness multiplier; missing entries are 1
    SensorParams sensor;
    TactorGeometry geometry;

    PdGains gains_for(int channel) const {
        return channel < static_cast<int>(gains.size()) ? gains[static_cast<std::size_t>(channel)] : PdGains{};
    }
    double site_factor(int channel) const {
        return channel < static_cast<int>(site_factors.size()) ? site_factors[static_cast<std::size_t>(channel)] : 1.0;
    }

    friend bool operator==(const DeviceParams&, const DeviceParams&) = default;
};

}  // namespace sumlab
