#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sumlab {

/// Frame layout: [0xAA][channel][opcode][payload 0..8][crc]. The CRC is
/// CRC-8/ATM (poly 0x07, init 0x00, no reflection) over channel..payload.
/// Payload length is fixed per opcode, so there is no length byte.
/// Opcodes 0x10..0x1F are reserved for a future force-control mode.
inline constexpr std::uint8_t kFrameSync = 0xAA;
inline constexpr std::size_t kMaxPayload = 8;
inline constexpr std::size_t kFrameOverhead = 4;

enum class Opcode : std::uint8_t {
    SetTarget = 0x01,  // u16 target, 0.01 mm
    GetPos = 0x02,
    GetForce = 0x03,
    SetGains = 0x04,   // u16 kp (0.01 /s), u16 kd (0.0001 s)
    Calibrate = 0x05,
    Ack = 0x06,        // u8 acked opcode, u8 status, u16 value
    Nak = 0x07,        // u8 rejected opcode, u8 NakCode
};

enum class NakCode : std::uint8_t { BadChannel = 1, BadValue = 2, Busy = 3, CalibrationFailed = 4, Unsupported = 5 };

std::string_view to_string(Opcode op);
bool is_known_opcode(std::uint8_t raw);
std::size_t payload_size(Opcode op);

struct WireFrame {
    std::uint8_t channel = 0;
    Opcode opcode = Opcode::GetPos;
    std::array<std::uint8_t, kMaxPayload> payload{};
    std::uint8_t payload_len = 0;

    std::span<const std::uint8_t> bytes() const { return {payload.data(), payload_len}; }
    std::uint16_t u16_at(std::size_t offset) const;

    friend bool operator==(const WireFrame&, const WireFrame&) = default;
};

std::uint8_t crc8_atm(std::span<const std::uint8_t> data);

/// Builds a frame, checking the payload length against the opcode.
WireFrame make_frame(std::uint8_t channel, Opcode op, std::span<const std::uint8_t> payload = {});

std::vector<std::uint8_t> encode_frame(const WireFrame& frame);
/// Decodes exactly one frame occupying all of `bytes`. Throws FrameError on
/// bad sync, unknown channel or opcode, wrong length, or CRC mismatch.
WireFrame decode_frame(std::span<const std::uint8_t> bytes);

// Fixed-point helpers. Values are rounded to the unit and must fit in u16.
std::uint16_t to_fixed(double value, double unit);
double from_fixed(std::uint16_t raw, double unit);
inline constexpr double kPositionUnitMm = 0.01;
inline constexpr double kForceUnitN = 0.01;
inline constexpr double kKpUnit = 0.01;
inline constexpr double kKdUnit = 0.0001;
inline constexpr double kStiffnessUnit = 0.0001;

WireFrame set_target_frame(std::uint8_t channel, double target_mm);
WireFrame set_gains_frame(std::uint8_t channel, double kp, double kd);
WireFrame ack_frame(std::uint8_t channel, Opcode acked, std::uint16_t value, std::uint8_t status = 0);
WireFrame nak_frame(std::uint8_t channel, Opcode rejected, NakCode code);

/// Incremental decoder for a byte stream. Garbage and corrupted frames are
/// skipped by resynchronising on the next sync byte.
class FrameStreamDecoder {
public:
    void feed(std::span<const std::uint8_t> bytes);
    std::optional<WireFrame> next();
    std::size_t rejected() const noexcept { return rejected_; }

private:
    std::vector<std::uint8_t> buffer_;
    std::size_t rejected_ = 0;
};

}  // namespace sumlab
