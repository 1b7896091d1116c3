#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sumlab/core/random.hpp"
#include "sumlab/core/types.hpp"
#include "sumlab/device/params.hpp"

namespace sumlab {

struct ActuatorState {
    double position_mm = 0.0;
    double velocity_mm_s = 0.0;
    double target_mm = 0.0;

    friend bool operator==(const ActuatorState&, const ActuatorState&) = default;
};

/// One control tick of a single actuator: the PD law turns position error
/// into a speed command, the motor speed follows it with a first-order lag,
/// and speed and position are clamped to the actuator limits.
ActuatorState step_actuator(ActuatorState state, const ActuatorParams& params, const PdGains& gains, double dt);

struct ForceSample {
    ChannelId channel;
    std::int64_t t_ms = 0;
    double force_n = 0.0;

    friend bool operator==(const ForceSample&, const ForceSample&) = default;
};

struct CalibrationReport {
    ChannelId channel;
    double stiffness_n_per_mm = 0.0;
    double zero_offset_mm = 0.0;
    double residual_rms_n = 0.0;
    int points = 0;

    friend bool operator==(const CalibrationReport&, const CalibrationReport&) = default;
};

struct DeviceState {
    std::vector<ActuatorState> actuators;
    std::int64_t ticks = 0;

    friend bool operator==(const DeviceState&, const DeviceState&) = default;
};

/// Advances every channel by one tick. `dt` must equal 1 / tick_rate_hz.
DeviceState tick(DeviceState state, const DeviceParams& params, double dt);

/// Reaction force of the tissue model at `position_mm` (no sensor effects).
double tissue_force(const TissueParams& tissue, double site_factor, double position_mm);

/// Sensor transfer: clip to [0, range], quantise to the resolution.
double sensor_reading(const SensorParams& sensor, double force_n);

/// Simulated multi-channel pressure device. Bit-deterministic given its
/// parameters, the command sequence and the noise seed.
class SimulatedDevice {
public:
    SimulatedDevice(DeviceParams params, std::uint64_t noise_seed);

    const DeviceParams& params() const noexcept { return params_; }
    int channel_count() const noexcept { return params_.channels; }
    const DeviceState& state() const noexcept { return state_; }
    const ActuatorState& actuator(ChannelId channel) const;
    std::int64_t t_ms() const noexcept;
    double dt() const noexcept { return 1.0 / params_.actuator.tick_rate_hz; }

    /// Target is clamped into [0, stroke]. Throws ChannelError for a channel
    /// the device does not have.
    void set_target(ChannelId channel, double target_mm);
    void set_gains(ChannelId channel, PdGains gains);
    PdGains gains(ChannelId channel) const;

    void tick();
    void advance_ms(int ms);
    /// Ticks until every actuator is within `tolerance_mm` of its target and
    /// nearly at rest, or `max_ms` elapses. Returns the elapsed milliseconds.
    int settle(double tolerance_mm = 0.005, int max_ms = 5000);
    bool idle() const;

    /// Sensor sample: tissue force plus zero-mean noise, clipped and quantised.
    ForceSample read_force(ChannelId channel);
    /// Noise-free sensor reading at the current position.
    double steady_state_force(ChannelId channel) const;

    void store_calibration(const CalibrationReport& report);
    std::optional<CalibrationReport> calibration(ChannelId channel) const;

private:
    void check(ChannelId channel) const;

    DeviceParams params_;
    DeviceState state_;
    std::vector<std::optional<CalibrationReport>> calibration_;
    Rng noise_;
};

}  // namespace sumlab
