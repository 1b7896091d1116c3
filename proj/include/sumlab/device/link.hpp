#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "sumlab/device/device.hpp"
#include "sumlab/device/wire.hpp"

namespace sumlab {

/// One direction of an in-memory serial line. An optional tap may rewrite
/// bytes in flight, which tests use to inject corruption.
class BytePipe {
public:
    using Tap = std::function<void(std::vector<std::uint8_t>&)>;

    void write(std::span<const std::uint8_t> bytes);
    std::vector<std::uint8_t> drain();
    bool empty() const noexcept { return bytes_.empty(); }
    void set_tap(Tap tap) { tap_ = std::move(tap); }

private:
    std::deque<std::uint8_t> bytes_;
    Tap tap_;
};

/// Device-side protocol handler: decodes host frames from `rx`, applies them
/// to `device` and answers with ACK or NAK on `tx`.
class DevicePeripheral {
public:
    /// Handles every complete frame waiting on `rx`. Returns frames handled.
    std::size_t service(SimulatedDevice& device, BytePipe& rx, BytePipe& tx);
    std::size_t rejected_frames() const noexcept { return decoder_.rejected(); }

private:
    FrameStreamDecoder decoder_;
};

/// Host-side handle to a simulated device over the wire protocol. Every
/// command is a full encode / transmit / decode / ACK round trip.
class DeviceLink {
public:
    DeviceLink(DeviceParams params, std::uint64_t noise_seed);

    SimulatedDevice& device() noexcept { return device_; }
    const SimulatedDevice& device() const noexcept { return device_; }
    BytePipe& host_to_device() noexcept { return to_device_; }
    BytePipe& device_to_host() noexcept { return to_host_; }

    /// Returns the target the device accepted (after clamping to the stroke).
    double set_target(ChannelId channel, double target_mm);
    double position(ChannelId channel);
    double force(ChannelId channel);
    void set_gains(ChannelId channel, PdGains gains);
    /// Runs the calibration sweep on the device. Returns the stiffness.
    double calibrate(ChannelId channel);

    void advance_ms(int ms) { device_.advance_ms(ms); }
    std::int64_t t_ms() const noexcept { return device_.t_ms(); }

private:
    WireFrame transact(const WireFrame& request);

    SimulatedDevice device_;
    DevicePeripheral peripheral_;
    BytePipe to_device_;
    BytePipe to_host_;
    FrameStreamDecoder host_decoder_;
};

}  // namespace sumlab
