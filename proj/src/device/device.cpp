#include "sumlab/device/device.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sumlab {

DeviceState tick(DeviceState state, const DeviceParams& params, double dt) {
    if (std::abs(dt * params.actuator.tick_rate_hz - 1.0) > 1e-12) {
        throw ConfigError("dt", "tick must advance exactly one control period");
    }
    for (std::size_t i = 0; i < state.actuators.size(); ++i) {
        state.actuators[i] = step_actuator(state.actuators[i], params.actuator, params.gains_for(static_cast<int>(i)), dt);
    }
    ++state.ticks;
    return state;
}

SimulatedDevice::SimulatedDevice(DeviceParams params, std::uint64_t noise_seed)
    : params_(std::move(params)), noise_(noise_seed) {
    if (params_.channels < 1 || params_.channels > kMaxChannels) throw ConfigError("device.channels", "must be in [1, 4]");
    state_.actuators.resize(static_cast<std::size_t>(params_.channels));
    calibration_.resize(static_cast<std::size_t>(params_.channels));
    std::vector<PdGains> gains;
    for (int i = 0; i < params_.channels; ++i) gains.push_back(params_.gains_for(i));
    params_.gains = std::move(gains);
}

void SimulatedDevice::check(ChannelId channel) const {
    if (channel.index() >= params_.channels) {
        throw ChannelError("device has no channel " + std::to_string(channel.index()));
    }
}

const ActuatorState& SimulatedDevice::actuator(ChannelId channel) const {
    check(channel);
    return state_.actuators[static_cast<std::size_t>(channel.index())];
}

std::int64_t SimulatedDevice::t_ms() const noexcept { return state_.ticks * 1000 / params_.actuator.tick_rate_hz; }

void SimulatedDevice::set_target(ChannelId channel, double target_mm) {
    check(channel);
    if (!std::isfinite(target_mm)) throw ConfigError("target_mm", "must be finite");
    state_.actuators[static_cast<std::size_t>(channel.index())].target_mm =
        std::clamp(target_mm, 0.0, params_.actuator.stroke_mm);
}

void SimulatedDevice::set_gains(ChannelId channel, PdGains gains) {
    check(channel);
    if (!(gains.kp > 0.0) || !(gains.kd >= 0.0)) throw ConfigError("gains", "kp must be > 0 and kd >= 0");
    params_.gains[static_cast<std::size_t>(channel.index())] = gains;
}

PdGains SimulatedDevice::gains(ChannelId channel) const {
    check(channel);
    return params_.gains[static_cast<std::size_t>(channel.index())];
}

void SimulatedDevice::tick() { state_ = sumlab::tick(std::move(state_), params_, dt()); }

void SimulatedDevice::advance_ms(int ms) {
    const std::int64_t ticks = std::int64_t{ms} * params_.actuator.tick_rate_hz / 1000;
    for (std::int64_t i = 0; i < ticks; ++i) tick();
}

bool SimulatedDevice::idle() const {
    return std::all_of(state_.actuators.begin(), state_.actuators.end(), [](const ActuatorState& a) {
        return std::abs(a.position_mm - a.target_mm) < 0.005 && std::abs(a.velocity_mm_s) < 0.05;
    });
}

int SimulatedDevice::settle(double tolerance_mm, int max_ms) {
    const std::int64_t start = state_.ticks;
    const std::int64_t limit = std::int64_t{max_ms} * params_.actuator.tick_rate_hz / 1000;
    auto settled = [&] {
        return std::all_of(state_.actuators.begin(), state_.actuators.end(), [&](const ActuatorState& a) {
            return std::abs(a.position_mm - a.target_mm) <= tolerance_mm && std::abs(a.velocity_mm_s) < 0.05;
        });
    };
    while (!settled() && state_.ticks - start < limit) tick();
    return static_cast<int>((state_.ticks - start) * 1000 / params_.actuator.tick_rate_hz);
}

ForceSample SimulatedDevice::read_force(ChannelId channel) {
    check(channel);
    const auto i = static_cast<std::size_t>(channel.index());
    double f = tissue_force(params_.tissue, params_.site_factor(channel.index()), state_.actuators[i].position_mm);
    if (params_.sensor.noise_sd_n > 0.0) {
        std::normal_distribution<double> noise(0.0, params_.sensor.noise_sd_n);
        f += noise(noise_);
    }
    return {channel, t_ms(), sensor_reading(params_.sensor, f)};
}

double SimulatedDevice::steady_state_force(ChannelId channel) const {
    const auto& a = actuator(channel);
    return sensor_reading(params_.sensor, tissue_force(params_.tissue, params_.site_factor(channel.index()), a.position_mm));
}

void SimulatedDevice::store_calibration(const CalibrationReport& report) {
    check(report.channel);
    calibration_[static_cast<std::size_t>(report.channel.index())] = report;
}

std::optional<CalibrationReport> SimulatedDevice::calibration(ChannelId channel) const {
    check(channel);
    return calibration_[static_cast<std::size_t>(channel.index())];
}

}  // namespace sumlab
