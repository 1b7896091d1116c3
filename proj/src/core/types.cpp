#include "sumlab/core/types.hpp"

#include <algorithm>
#include <cmath>

namespace sumlab {

ChannelSet make_channel_set(std::initializer_list<int> indices) {
    ChannelSet out;
    for (int i : indices) out.insert(ChannelId{i});
    return out;
}

std::string to_string(const ChannelSet& channels) {
    std::string out = "{";
    for (auto it = channels.begin(); it != channels.end(); ++it) {
        if (it != channels.begin()) out += ",";
        out += std::to_string(it->index());
    }
    return out + "}";
}

StimulusLevel::StimulusLevel(double position_mm) : mm_(position_mm) {
    if (!std::isfinite(position_mm) || position_mm < 0.0) {
        throw ConfigError("stimulus level must be finite and >= 0, got " + std::to_string(position_mm));
    }
}

AsrResult::AsrResult(double detection_threshold_mm, double max_comfortable_mm)
    : detection_mm_(detection_threshold_mm),
      max_mm_(max_comfortable_mm),
      reference_mm_((detection_threshold_mm + max_comfortable_mm) / 2.0) {
    if (!std::isfinite(detection_mm_) || !std::isfinite(max_mm_)) {
        throw ConfigError("ASR bounds must be finite");
    }
    if (!(detection_mm_ < max_mm_)) {
        throw ConfigError("ASR detection threshold must be below max comfortable");
    }
}

StimulusSpec StimulusSpec::uniform(const ChannelSet& channels, double level_mm, StimulusTiming timing) {
    StimulusSpec spec;
    spec.timing = timing;
    for (ChannelId ch : channels) spec.levels.emplace(ch, StimulusLevel{level_mm});
    return spec;
}

ChannelSet StimulusSpec::channels() const {
    ChannelSet out;
    for (const auto& [ch, level] : levels) out.insert(ch);
    return out;
}

void StimulusSpec::validate(double stroke_mm, const AsrResult* asr) const {
    if (levels.empty()) throw ConfigError("stimulus.levels", "at least one channel required");
    if (timing.hold_ms <= 0) throw ConfigError("stimulus.hold_ms", "must be > 0");
    if (timing.gap_ms < 0) throw ConfigError("stimulus.gap_ms", "must be >= 0");
    for (const auto& [ch, level] : levels) {
        if (level.mm() > stroke_mm) {
            throw ConfigError("stimulus.levels", "channel " + std::to_string(ch.index()) +
                                                     " exceeds stroke limit");
        }
        if (asr != nullptr && !asr->contains(level.mm())) {
            throw ConfigError("stimulus.levels", "channel " + std::to_string(ch.index()) +
                                                     " outside the registered ASR");
        }
    }
}

std::string_view to_string(Judgment judgment) {
    switch (judgment) {
        case Judgment::FirstGreater: return "first_greater";
        case Judgment::Equal: return "equal";
        case Judgment::FirstLess: return "first_less";
    }
    return "equal";
}

Judgment judgment_from_string(std::string_view text) {
    if (text == "first_greater") return Judgment::FirstGreater;
    if (text == "equal") return Judgment::Equal;
    if (text == "first_less") return Judgment::FirstLess;
    throw ConfigError("judgment", "unknown judgment '" + std::string(text) + "'");
}

StimulusLevel clamp_to_asr(StimulusLevel level, const AsrResult& asr) {
    return StimulusLevel{std::clamp(level.mm(), asr.detection_threshold_mm(), asr.max_comfortable_mm())};
}

}  // namespace sumlab
