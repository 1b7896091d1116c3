#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "sumlab/errors.hpp"

namespace sumlab {

/// Maximum number of pressure stimulators a device exposes.
inline constexpr int kMaxChannels = 4;

/// Index of one pressure stimulator, always in [0, kMaxChannels).
class ChannelId {
public:
    constexpr ChannelId() = default;
    explicit ChannelId(int index) : index_(static_cast<std::uint8_t>(index)) {
        if (index < 0 || index >= kMaxChannels) {
            throw ChannelError("channel index " + std::to_string(index) + " outside [0, " +
                               std::to_string(kMaxChannels - 1) + "]");
        }
    }

    constexpr int index() const noexcept { return index_; }

    friend constexpr auto operator<=>(ChannelId, ChannelId) = default;

private:
    std::uint8_t index_ = 0;
};

using ChannelSet = std::set<ChannelId>;

ChannelSet make_channel_set(std::initializer_list<int> indices);
std::string to_string(const ChannelSet& channels);

/// Commanded actuator extension in millimetres; the stimulus-intensity proxy.
class StimulusLevel {
public:
    constexpr StimulusLevel() = default;
    /// Throws ConfigError for negative or non-finite positions.
    explicit StimulusLevel(double position_mm);

    constexpr double mm() const noexcept { return mm_; }

    friend constexpr auto operator<=>(StimulusLevel, StimulusLevel) = default;

private:
    double mm_ = 0.0;
};

struct StimulusTiming {
    int hold_ms = 1000;
    int gap_ms = 500;

    friend bool operator==(const StimulusTiming&, const StimulusTiming&) = default;
};

/// Allowable stimulus range of one channel configuration.
///
/// `reference_mm` is always `(detection_threshold_mm + max_comfortable_mm) / 2`
/// evaluated in double precision: one rounding in the sum, the halving is exact.
class AsrResult {
public:
    /// Throws ConfigError unless detection < max and both are finite.
    AsrResult(double detection_threshold_mm, double max_comfortable_mm);

    double detection_threshold_mm() const noexcept { return detection_mm_; }
    double max_comfortable_mm() const noexcept { return max_mm_; }
    double reference_mm() const noexcept { return reference_mm_; }

    bool contains(double level_mm) const noexcept {
        return level_mm >= detection_mm_ && level_mm <= max_mm_;
    }

    friend bool operator==(const AsrResult&, const AsrResult&) = default;

private:
    double detection_mm_;
    double max_mm_;
    double reference_mm_;
};

/// Per-channel stimulus held for `timing.hold_ms`, followed by `timing.gap_ms` of rest.
struct StimulusSpec {
    std::map<ChannelId, StimulusLevel> levels;
    StimulusTiming timing;

    /// Every channel in `channels` driven to the same level.
    static StimulusSpec uniform(const ChannelSet& channels, double level_mm, StimulusTiming timing = {});

    ChannelSet channels() const;

    /// Checks the structural invariants: at least one channel, positive hold,
    /// non-negative gap, every level within the stroke and (when given) the ASR.
    void validate(double stroke_mm, const AsrResult* asr = nullptr) const;

    friend bool operator==(const StimulusSpec&, const StimulusSpec&) = default;
};

enum class Judgment : std::uint8_t { FirstGreater, Equal, FirstLess };

std::string_view to_string(Judgment judgment);
Judgment judgment_from_string(std::string_view text);

struct Response {
    Judgment judgment = Judgment::Equal;
    int latency_ms = 0;

    friend bool operator==(const Response&, const Response&) = default;
};

/// Clamp a level into [detection threshold, max comfortable].
StimulusLevel clamp_to_asr(StimulusLevel level, const AsrResult& asr);

}  // namespace sumlab
