#include "sumlab/device/link.hpp"

#include <string>

#include "sumlab/device/calibration.hpp"
#include "sumlab/errors.hpp"

namespace sumlab {

void BytePipe::write(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint8_t> chunk(bytes.begin(), bytes.end());
    if (tap_) tap_(chunk);
    bytes_.insert(bytes_.end(), chunk.begin(), chunk.end());
}

std::vector<std::uint8_t> BytePipe::drain() {
    std::vector<std::uint8_t> out(bytes_.begin(), bytes_.end());
    bytes_.clear();
    return out;
}

namespace {

WireFrame handle(SimulatedDevice& device, const WireFrame& frame) {
    const std::uint8_t ch = frame.channel;
    if (ch >= device.channel_count()) return nak_frame(ch, frame.opcode, NakCode::BadChannel);
    const ChannelId channel{ch};
    switch (frame.opcode) {
        case Opcode::SetTarget: {
            device.set_target(channel, from_fixed(frame.u16_at(0), kPositionUnitMm));
            return ack_frame(ch, frame.opcode, to_fixed(device.actuator(channel).target_mm, kPositionUnitMm));
        }
        case Opcode::GetPos:
            return ack_frame(ch, frame.opcode, to_fixed(device.actuator(channel).position_mm, kPositionUnitMm));
        case Opcode::GetForce:
            return ack_frame(ch, frame.opcode, to_fixed(device.read_force(channel).force_n, kForceUnitN));
        case Opcode::SetGains: {
            const PdGains gains{from_fixed(frame.u16_at(0), kKpUnit), from_fixed(frame.u16_at(2), kKdUnit)};
            if (!(gains.kp > 0.0)) return nak_frame(ch, frame.opcode, NakCode::BadValue);
            device.set_gains(channel, gains);
            return ack_frame(ch, frame.opcode, 0);
        }
        case Opcode::Calibrate: {
            if (!device.idle()) return nak_frame(ch, frame.opcode, NakCode::Busy);
            try {
                const auto report = calibrate_channel(device, channel);
                const double k = std::min(report.stiffness_n_per_mm, 65535 * kStiffnessUnit);
                return ack_frame(ch, frame.opcode, to_fixed(k, kStiffnessUnit));
            } catch (const CalibrationError&) {
                return nak_frame(ch, frame.opcode, NakCode::CalibrationFailed);
            }
        }
        case Opcode::Ack:
        case Opcode::Nak:
            break;
    }
    return nak_frame(ch, frame.opcode, NakCode::Unsupported);
}

}  // namespace

std::size_t DevicePeripheral::service(SimulatedDevice& device, BytePipe& rx, BytePipe& tx) {
    const auto incoming = rx.drain();
    decoder_.feed(incoming);
    std::size_t handled = 0;
    while (auto frame = decoder_.next()) {
        tx.write(encode_frame(handle(device, *frame)));
        ++handled;
    }
    return handled;
}

DeviceLink::DeviceLink(DeviceParams params, std::uint64_t noise_seed)
    : device_(std::move(params), noise_seed) {}

WireFrame DeviceLink::transact(const WireFrame& request) {
    to_device_.write(encode_frame(request));
    peripheral_.service(device_, to_device_, to_host_);
    const auto reply_bytes = to_host_.drain();
    host_decoder_.feed(reply_bytes);
    const auto reply = host_decoder_.next();
    if (!reply) throw ProtocolError(std::string("no valid reply to ") + std::string(to_string(request.opcode)));
    if (reply->channel != request.channel || reply->payload[0] != static_cast<std::uint8_t>(request.opcode)) {
        throw ProtocolError("reply does not match the request");
    }
    if (reply->opcode == Opcode::Nak) {
        const auto code = static_cast<NakCode>(reply->payload[1]);
        const std::string what = std::string(to_string(request.opcode)) + " rejected by device";
        if (code == NakCode::BadChannel) throw ChannelError(what + ": no such channel");
        if (code == NakCode::CalibrationFailed) throw CalibrationError(what + ": calibration failed");
        throw ProtocolError(what + " (code " + std::to_string(reply->payload[1]) + ")");
    }
    return *reply;
}

double DeviceLink::set_target(ChannelId channel, double target_mm) {
    const auto reply = transact(set_target_frame(static_cast<std::uint8_t>(channel.index()), target_mm));
    return from_fixed(reply.u16_at(2), kPositionUnitMm);
}

double DeviceLink::position(ChannelId channel) {
    const auto reply = transact(make_frame(static_cast<std::uint8_t>(channel.index()), Opcode::GetPos));
    return from_fixed(reply.u16_at(2), kPositionUnitMm);
}

double DeviceLink::force(ChannelId channel) {
    const auto reply = transact(make_frame(static_cast<std::uint8_t>(channel.index()), Opcode::GetForce));
    return from_fixed(reply.u16_at(2), kForceUnitN);
}

void DeviceLink::set_gains(ChannelId channel, PdGains gains) {
    transact(set_gains_frame(static_cast<std::uint8_t>(channel.index()), gains.kp, gains.kd));
}

double DeviceLink::calibrate(ChannelId channel) {
    const auto reply = transact(make_frame(static_cast<std::uint8_t>(channel.index()), Opcode::Calibrate));
    return from_fixed(reply.u16_at(2), kStiffnessUnit);
}

}  // namespace sumlab
