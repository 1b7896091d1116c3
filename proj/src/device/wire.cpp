#include "sumlab/device/wire.hpp"

#include <cmath>
#include <string>

#include "sumlab/errors.hpp"
#include "sumlab/core/types.hpp"

namespace sumlab {

std::string_view to_string(Opcode op) {
    switch (op) {
        case Opcode::SetTarget: return "SET_TARGET";
        case Opcode::GetPos: return "GET_POS";
        case Opcode::GetForce: return "GET_FORCE";
        case Opcode::SetGains: return "SET_GAINS";
        case Opcode::Calibrate: return "CALIBRATE";
        case Opcode::Ack: return "ACK";
        case Opcode::Nak: return "NAK";
    }
    return "?";
}

bool is_known_opcode(std::uint8_t raw) { return raw >= 0x01 && raw <= 0x07; }

std::size_t payload_size(Opcode op) {
    switch (op) {
        case Opcode::SetTarget: return 2;
        case Opcode::GetPos:
        case Opcode::GetForce:
        case Opcode::Calibrate: return 0;
        case Opcode::SetGains: return 4;
        case Opcode::Ack: return 4;
        case Opcode::Nak: return 2;
    }
    throw FrameError("unknown opcode");
}

std::uint16_t WireFrame::u16_at(std::size_t offset) const {
    if (offset + 2 > payload_len) throw FrameError("payload too short");
    return static_cast<std::uint16_t>(payload[offset] | (payload[offset + 1] << 8));
}

std::uint8_t crc8_atm(std::span<const std::uint8_t> data) {
    std::uint8_t crc = 0;
    for (std::uint8_t byte : data) {
        crc ^= byte;
        for (int bit = 0; bit < 8; ++bit) crc = static_cast<std::uint8_t>((crc & 0x80) ? (crc << 1) ^ 0x07 : crc << 1);
    }
    return crc;
}

WireFrame make_frame(std::uint8_t channel, Opcode op, std::span<const std::uint8_t> payload) {
    if (channel >= kMaxChannels) throw FrameError("channel " + std::to_string(channel) + " out of range");
    if (payload.size() != payload_size(op)) {
        throw FrameError(std::string(to_string(op)) + " takes " + std::to_string(payload_size(op)) + " payload bytes");
    }
    WireFrame f;
    f.channel = channel;
    f.opcode = op;
    f.payload_len = static_cast<std::uint8_t>(payload.size());
    std::copy(payload.begin(), payload.end(), f.payload.begin());
    return f;
}

std::vector<std::uint8_t> encode_frame(const WireFrame& frame) {
    make_frame(frame.channel, frame.opcode, frame.bytes());  // validates
    std::vector<std::uint8_t> out;
    out.reserve(kFrameOverhead + frame.payload_len);
    out.push_back(kFrameSync);
    out.push_back(frame.channel);
    out.push_back(static_cast<std::uint8_t>(frame.opcode));
    out.insert(out.end(), frame.payload.begin(), frame.payload.begin() + frame.payload_len);
    out.push_back(crc8_atm(std::span(out).subspan(1)));
    return out;
}

WireFrame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFrameOverhead) throw FrameError("frame too short");
    if (bytes[0] != kFrameSync) throw FrameError("bad sync byte");
    if (bytes[1] >= kMaxChannels) throw FrameError("channel out of range");
    if (!is_known_opcode(bytes[2])) throw FrameError("unknown opcode");
    const auto op = static_cast<Opcode>(bytes[2]);
    if (bytes.size() != kFrameOverhead + payload_size(op)) throw FrameError("length does not match opcode");
    if (crc8_atm(bytes.subspan(1, bytes.size() - 2)) != bytes.back()) throw FrameError("CRC mismatch");
    return make_frame(bytes[1], op, bytes.subspan(3, payload_size(op)));
}

std::uint16_t to_fixed(double value, double unit) {
    const double raw = std::round(value / unit);
    if (!(raw >= 0.0 && raw <= 65535.0)) throw FrameError("value does not fit the fixed-point field");
    return static_cast<std::uint16_t>(raw);
}

double from_fixed(std::uint16_t raw, double unit) { return raw * unit; }

namespace {

void put_u16(std::array<std::uint8_t, kMaxPayload>& p, std::size_t at, std::uint16_t v) {
    p[at] = static_cast<std::uint8_t>(v & 0xFF);
    p[at + 1] = static_cast<std::uint8_t>(v >> 8);
}

}  // namespace

WireFrame set_target_frame(std::uint8_t channel, double target_mm) {
    std::array<std::uint8_t, kMaxPayload> p{};
    put_u16(p, 0, to_fixed(target_mm, kPositionUnitMm));
    return make_frame(channel, Opcode::SetTarget, std::span(p).first(2));
}

WireFrame set_gains_frame(std::uint8_t channel, double kp, double kd) {
    std::array<std::uint8_t, kMaxPayload> p{};
    put_u16(p, 0, to_fixed(kp, kKpUnit));
    put_u16(p, 2, to_fixed(kd, kKdUnit));
    return make_frame(channel, Opcode::SetGains, std::span(p).first(4));
}

WireFrame ack_frame(std::uint8_t channel, Opcode acked, std::uint16_t value, std::uint8_t status) {
    std::array<std::uint8_t, kMaxPayload> p{};
    p[0] = static_cast<std::uint8_t>(acked);
    p[1] = status;
    put_u16(p, 2, value);
    return make_frame(channel, Opcode::Ack, std::span(p).first(4));
}

WireFrame nak_frame(std::uint8_t channel, Opcode rejected, NakCode code) {
    const std::uint8_t p[2] = {static_cast<std::uint8_t>(rejected), static_cast<std::uint8_t>(code)};
    return make_frame(channel, Opcode::Nak, p);
}

void FrameStreamDecoder::feed(std::span<const std::uint8_t> bytes) { buffer_.insert(buffer_.end(), bytes.begin(), bytes.end()); }

std::optional<WireFrame> FrameStreamDecoder::next() {
    std::size_t start = 0;
    std::optional<WireFrame> found;
    while (start < buffer_.size()) {
        if (buffer_[start] != kFrameSync) {
            ++start;
            continue;
        }
        if (buffer_.size() - start < 3) break;  // need the opcode to know the length
        const std::uint8_t raw_op = buffer_[start + 2];
        if (!is_known_opcode(raw_op) || buffer_[start + 1] >= kMaxChannels) {
            ++rejected_;
            ++start;
            continue;
        }
        const std::size_t len = kFrameOverhead + payload_size(static_cast<Opcode>(raw_op));
        if (buffer_.size() - start < len) break;
        try {
            found = decode_frame(std::span(buffer_).subspan(start, len));
            start += len;
            break;
        } catch (const FrameError&) {
            ++rejected_;
            ++start;
        }
    }
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(start));
    return found;
}

}  // namespace sumlab
