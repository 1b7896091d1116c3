#pragma once

#include "sumlab/device/device.hpp"

namespace sumlab {

struct CalibrationOptions {
    double sweep_step_mm = 0.5;
    int samples_per_point = 10;
    int max_settle_ms = 3000;
};

/// Sweeps the channel across its stroke, averages force samples at each
/// settled position and fits F = k * x + b by least squares over the points
/// in contact and below saturation. The zero offset is -b / k. Stores the
/// report on the device and returns the actuator to 0.
///
/// Throws CalibrationError if the device is not idle, or if fewer than three
/// usable points exist (no contact, or everything saturated).
CalibrationReport calibrate_channel(SimulatedDevice& device, ChannelId channel, const CalibrationOptions& options = {});

}  // namespace sumlab
