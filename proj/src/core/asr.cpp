#include "sumlab/core/asr.hpp"

#include <algorithm>
#include <cmath>

namespace sumlab {

std::string_view to_string(AsrSignal signal) {
    switch (signal) {
        case AsrSignal::NotDetected: return "not_detected";
        case AsrSignal::Detected: return "detected";
        case AsrSignal::MaxComfortable: return "max_comfortable";
    }
    return "not_detected";
}

AsrSignal asr_signal_from_string(std::string_view text) {
    if (text == "not_detected") return AsrSignal::NotDetected;
    if (text == "detected") return AsrSignal::Detected;
    if (text == "max_comfortable") return AsrSignal::MaxComfortable;
    throw ConfigError("signal", "unknown ASR signal '" + std::string(text) + "'");
}

AsrProcedure::AsrProcedure(ChannelSet channels, double step_mm, double stroke_mm, StimulusTiming timing)
    : channels_(std::move(channels)), step_mm_(step_mm), stroke_mm_(stroke_mm), timing_(timing) {
    if (channels_.empty()) throw ConfigError("asr.channels", "at least one channel required");
    if (!(step_mm_ > 0.0) || !std::isfinite(step_mm_)) throw ConfigError("asr.step_mm", "must be > 0");
    if (!(stroke_mm_ > 0.0)) throw ConfigError("device.stroke_mm", "must be > 0");
}

double AsrProcedure::pending_level_mm() const {
    if (complete()) throw ProcedureComplete("ASR series already complete");
    return index_ * step_mm_;
}

StimulusSpec AsrProcedure::pending() const {
    return StimulusSpec::uniform(channels_, pending_level_mm(), timing_);
}

void AsrProcedure::respond(AsrSignal signal) {
    const double level = pending_level_mm();
    AsrStep step{level, signal, false};

    if (!detection_mm_) {
        if (signal == AsrSignal::MaxComfortable) {
            steps_.push_back(step);
            throw AsrError("max-comfortable signalled before any detection at " + std::to_string(level) + " mm");
        }
        if (signal == AsrSignal::Detected) detection_mm_ = level;
    } else if (signal == AsrSignal::NotDetected) {
        step.anomaly = true;
    } else if (signal == AsrSignal::MaxComfortable) {
        steps_.push_back(step);
        result_ = AsrResult{*detection_mm_, level};
        return;
    }
    steps_.push_back(step);

    if ((index_ + 1) * step_mm_ > stroke_mm_) {
        throw AsrOutOfRange("stroke limit " + std::to_string(stroke_mm_) +
                            " mm reached before max-comfortable was signalled");
    }
    ++index_;
}

std::size_t AsrProcedure::anomaly_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(steps_.begin(), steps_.end(), [](const AsrStep& s) { return s.anomaly; }));
}

const AsrResult& AsrProcedure::result() const {
    if (!result_) throw ProcedureIncomplete("ASR series has not reached max-comfortable");
    return *result_;
}

AsrRun run_asr(const ChannelSet& channels, const AsrResponder& responder, double ascending_step_mm,
               double stroke_mm, StimulusTiming timing) {
    AsrProcedure procedure(channels, ascending_step_mm, stroke_mm, timing);
    while (!procedure.complete()) procedure.respond(responder(procedure.pending()));
    return {procedure.result(), procedure.steps(), procedure.anomaly_count()};
}

const AsrResult* AsrRegistry::find(const ChannelSet& channels) const {
    auto it = results_.find(channels);
    return it == results_.end() ? nullptr : &it->second;
}

const AsrResult& AsrRegistry::at(const ChannelSet& channels) const {
    if (const AsrResult* asr = find(channels)) return *asr;
    throw ConfigError("asr", "no ASR registered for channels " + to_string(channels));
}

void AsrRegistry::validate(const StimulusSpec& spec, double stroke_mm) const {
    spec.validate(stroke_mm, find(spec.channels()));
}

}  // namespace sumlab
