#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "sumlab/core/format.hpp"
#include "sumlab/core/random.hpp"
#include "sumlab/core/types.hpp"

namespace sumlab {

enum class Direction : std::uint8_t { None, Up, Down };
enum class EqualPolicy : std::uint8_t { Incorrect, Ignore };
enum class TrialOutcome : std::uint8_t { Correct, Incorrect, Discarded };

std::string_view to_string(EqualPolicy policy);
EqualPolicy equal_policy_from_string(std::string_view text);

inline constexpr double kDefaultStepUpMm = 0.25;
inline constexpr double kDefaultStepRatio = 0.7393;

/// Transformed 2-down/1-up staircase on the comparison level.
struct StaircaseConfig {
    double reference_mm = 0.0;
    double start_comparison_mm = 0.0;
    double step_up_mm = kDefaultStepUpMm;
    double step_ratio_down_over_up = kDefaultStepRatio;
    int n_reversals_to_stop = 16;
    int n_reversals_for_estimate = 3;
    EqualPolicy equal_counts_as = EqualPolicy::Incorrect;
    ChannelSet channel_set;
    StimulusTiming timing;
    /// Seed of the presentation-order schedule.
    std::uint64_t schedule_seed = 0;

    double step_down_mm() const noexcept { return step_up_mm * step_ratio_down_over_up; }

    /// Reference at the ASR midpoint, start halfway between reference and ASR max.
    static StaircaseConfig from_asr(const AsrResult& asr, ChannelSet channels);

    /// Throws ConfigError on any violated invariant. When `asr` is given the
    /// start level must also lie inside it.
    void validate(const AsrResult* asr = nullptr) const;

    friend bool operator==(const StaircaseConfig&, const StaircaseConfig&) = default;
};

struct TrialRecord {
    int trial_index = 0;
    bool reference_first = true;
    double comparison_mm = 0.0;
    Response response;
    TrialOutcome outcome = TrialOutcome::Incorrect;
    bool reversal = false;
    /// Comparison level after this trial's update (clamped).
    double next_comparison_mm = 0.0;

    bool scored_correct() const noexcept { return outcome == TrialOutcome::Correct; }

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct StaircaseState {
    double current_comparison_mm = 0.0;
    int consecutive_correct = 0;
    Direction last_move_direction = Direction::None;
    std::vector<double> reversal_levels_mm;
    std::vector<TrialRecord> trial_log;
    bool complete = false;

    friend bool operator==(const StaircaseState&, const StaircaseState&) = default;
};

struct JndEstimate {
    /// Mean of the last k reversal levels; the headline "JND" figure.
    double converged_level_mm = 0.0;
    /// Sample standard deviation (n - 1) of those k levels; 0 when k = 1.
    double converged_level_sd_mm = 0.0;
    /// converged_level_mm - reference_mm.
    double jnd_delta_mm = 0.0;
    int reversals_used = 0;

    friend bool operator==(const JndEstimate&, const JndEstimate&) = default;
};

/// Initial state; throws ConfigError when the configuration is invalid or the
/// start level lies outside the ASR.
StaircaseState init_staircase(const StaircaseConfig& config, const AsrResult& asr);

/// Scoring of one judgment. Correct means the comparison (the higher level)
/// was identified as greater, taking presentation order into account.
TrialOutcome score_judgment(Judgment judgment, bool reference_first, EqualPolicy policy);

/// Level update for one scored trial. Two consecutive correct responses move
/// down by step_down, any incorrect response moves up by step_up. The level is
/// clamped to the ASR; a change of the response-driven direction records a
/// reversal at the pre-move level. Clamping never creates a reversal.
/// Throws ProcedureComplete on a complete state. Does not touch trial_log.
StaircaseState apply_response(StaircaseState state, bool scored_correct, const StaircaseConfig& config,
                              const AsrResult& asr);

/// Mean and sd of the last `reversals_for_estimate` reversal levels.
/// Throws ProcedureIncomplete unless the state is complete.
JndEstimate estimate_jnd(const StaircaseState& state, double reference_mm, int reversals_for_estimate);

struct PendingTrial {
    int trial_index = 0;
    double comparison_mm = 0.0;
    PairPresentation presentation;
};

/// Single-writer staircase session: schedules trials, scores responses and
/// keeps the full trial log. Copyable, so snapshots are plain copies.
class Staircase {
public:
    Staircase(StaircaseConfig config, AsrResult asr);

    const StaircaseConfig& config() const noexcept { return config_; }
    const AsrResult& asr() const noexcept { return asr_; }
    const StaircaseState& state() const noexcept { return state_; }
    bool complete() const noexcept { return state_.complete; }
    const std::optional<PendingTrial>& pending() const noexcept { return pending_; }

    /// Schedules the next reference/comparison pair, or returns the one
    /// already pending. Throws ProcedureComplete once complete.
    const PairPresentation& next_trial();

    /// Throws ProtocolError when no trial is pending.
    TrialOutcome score_response(const Response& response) const;

    /// Scores, updates and logs the pending trial.
    const TrialRecord& respond(const Response& response);

    JndEstimate estimate() const {
        return estimate_jnd(state_, config_.reference_mm, config_.n_reversals_for_estimate);
    }

private:
    StaircaseConfig config_;
    AsrResult asr_;
    StaircaseState state_;
    std::optional<PendingTrial> pending_;
};

/// Staircase trace as delimiter-separated text, one row per trial:
/// `trial,level_mm,correct,reversal,discarded`. Levels use the shortest
/// round-trip decimal form.
void write_trace_csv(std::ostream& out, const StaircaseState& state);

}  // namespace sumlab
