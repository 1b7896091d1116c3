#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "sumlab/core/types.hpp"

namespace sumlab {

/// What a participant reports for one ascending-series stimulus.
enum class AsrSignal : std::uint8_t { NotDetected, Detected, MaxComfortable };

std::string_view to_string(AsrSignal signal);
AsrSignal asr_signal_from_string(std::string_view text);

struct AsrStep {
    double level_mm = 0.0;
    AsrSignal signal = AsrSignal::NotDetected;
    bool anomaly = false;  // undetected after an earlier detection

    friend bool operator==(const AsrStep&, const AsrStep&) = default;
};

/// Ascending method-of-limits series for one channel configuration.
///
/// Levels run 0, step, 2*step, ... (computed as i * step, never accumulated).
/// The first level reported Detected (or MaxComfortable) becomes the detection
/// threshold; the series then continues until MaxComfortable. A NotDetected
/// after detection is kept and flagged as an anomaly.
class AsrProcedure {
public:
    AsrProcedure(ChannelSet channels, double step_mm, double stroke_mm, StimulusTiming timing = {});

    const ChannelSet& channels() const noexcept { return channels_; }
    bool complete() const noexcept { return result_.has_value(); }

    /// Stimulus awaiting a signal. Throws ProcedureComplete once finished.
    StimulusSpec pending() const;
    double pending_level_mm() const;

    /// Throws AsrOutOfRange when the next level would exceed the stroke, and
    /// AsrError when max-comfortable is signalled on the detection step.
    void respond(AsrSignal signal);

    const std::vector<AsrStep>& steps() const noexcept { return steps_; }
    std::size_t anomaly_count() const noexcept;
    /// Throws ProcedureIncomplete before max-comfortable has been signalled.
    const AsrResult& result() const;

private:
    ChannelSet channels_;
    double step_mm_;
    double stroke_mm_;
    StimulusTiming timing_;
    int index_ = 0;
    std::optional<double> detection_mm_;
    std::optional<AsrResult> result_;
    std::vector<AsrStep> steps_;
};

using AsrResponder = std::function<AsrSignal(const StimulusSpec&)>;

struct AsrRun {
    AsrResult result;
    std::vector<AsrStep> steps;
    std::size_t anomalies = 0;
};

/// Drives an AsrProcedure to completion with `responder`.
AsrRun run_asr(const ChannelSet& channels, const AsrResponder& responder, double ascending_step_mm,
               double stroke_mm = 20.0, StimulusTiming timing = {});

/// ASR results registered per channel configuration; later procedures on that
/// configuration clamp their levels to the registered range.
class AsrRegistry {
public:
    void register_result(const ChannelSet& channels, const AsrResult& asr) { results_.insert_or_assign(channels, asr); }
    const AsrResult* find(const ChannelSet& channels) const;
    /// Throws ConfigError when no ASR is registered for `channels`.
    const AsrResult& at(const ChannelSet& channels) const;

    /// Validates `spec` against the stroke and against the ASR registered for
    /// its channel set, if any.
    void validate(const StimulusSpec& spec, double stroke_mm) const;

private:
    std::map<ChannelSet, AsrResult> results_;
};

}  // namespace sumlab
