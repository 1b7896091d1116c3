#include "sumlab/staircase/staircase.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace sumlab {

std::string_view to_string(EqualPolicy policy) {
    return policy == EqualPolicy::Ignore ? "ignore" : "incorrect";
}

EqualPolicy equal_policy_from_string(std::string_view text) {
    if (text == "incorrect") return EqualPolicy::Incorrect;
    if (text == "ignore") return EqualPolicy::Ignore;
    throw ConfigError("staircase.equal_counts_as", "expected 'incorrect' or 'ignore'");
}

StaircaseConfig StaircaseConfig::from_asr(const AsrResult& asr, ChannelSet channels) {
    StaircaseConfig c;
    c.reference_mm = asr.reference_mm();
    c.start_comparison_mm = c.reference_mm + 0.5 * (asr.max_comfortable_mm() - c.reference_mm);
    c.channel_set = std::move(channels);
    return c;
}

void StaircaseConfig::validate(const AsrResult* asr) const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(reference_mm) || reference_mm < 0.0) throw ConfigError("staircase.reference_mm", "must be finite and >= 0");
    if (!finite(start_comparison_mm)) throw ConfigError("staircase.start_mm", "must be finite");
    if (!(start_comparison_mm > reference_mm)) throw ConfigError("staircase.start_mm", "must exceed the reference level");
    if (!(step_up_mm > 0.0) || !finite(step_up_mm)) throw ConfigError("staircase.step_up_mm", "must be > 0");
    if (!(step_ratio_down_over_up > 0.0 && step_ratio_down_over_up <= 1.0))
        throw ConfigError("staircase.step_ratio", "must be in (0, 1]");
    if (n_reversals_to_stop < 4) throw ConfigError("staircase.reversals_to_stop", "must be >= 4");
    if (n_reversals_for_estimate < 1 || n_reversals_for_estimate > n_reversals_to_stop)
        throw ConfigError("staircase.reversals_for_estimate", "must be in [1, reversals_to_stop]");
    if (channel_set.empty()) throw ConfigError("staircase.channels", "at least one channel required");
    if (timing.hold_ms <= 0) throw ConfigError("timing.hold_ms", "must be > 0");
    if (timing.gap_ms < 0) throw ConfigError("timing.gap_ms", "must be >= 0");
    if (asr != nullptr && !asr->contains(start_comparison_mm))
        throw ConfigError("staircase.start_mm", "start level outside the registered ASR");
}

StaircaseState init_staircase(const StaircaseConfig& config, const AsrResult& asr) {
    config.validate(&asr);
    StaircaseState s;
    s.current_comparison_mm = config.start_comparison_mm;
    return s;
}

TrialOutcome score_judgment(Judgment judgment, bool reference_first, EqualPolicy policy) {
    if (judgment == Judgment::Equal) {
        return policy == EqualPolicy::Ignore ? TrialOutcome::Discarded : TrialOutcome::Incorrect;
    }
    const Judgment comparison_greater = reference_first ? Judgment::FirstLess : Judgment::FirstGreater;
    return judgment == comparison_greater ? TrialOutcome::Correct : TrialOutcome::Incorrect;
}

StaircaseState apply_response(StaircaseState state, bool scored_correct, const StaircaseConfig& config,
                              const AsrResult& asr) {
    if (state.complete) throw ProcedureComplete("staircase already complete");

    Direction move = Direction::None;
    double target = state.current_comparison_mm;
    if (scored_correct) {
        if (++state.consecutive_correct == 2) {
            state.consecutive_correct = 0;
            move = Direction::Down;
            target = state.current_comparison_mm - config.step_down_mm();
        }
    } else {
        state.consecutive_correct = 0;
        move = Direction::Up;
        target = state.current_comparison_mm + config.step_up_mm;
    }

    if (move == Direction::None) return state;

    if (state.last_move_direction != Direction::None && move != state.last_move_direction) {
        state.reversal_levels_mm.push_back(state.current_comparison_mm);
    }
    state.last_move_direction = move;
    state.current_comparison_mm = std::clamp(target, asr.detection_threshold_mm(), asr.max_comfortable_mm());
    if (static_cast<int>(state.reversal_levels_mm.size()) >= config.n_reversals_to_stop) state.complete = true;
    return state;
}

JndEstimate estimate_jnd(const StaircaseState& state, double reference_mm, int reversals_for_estimate) {
    if (!state.complete) throw ProcedureIncomplete("staircase has not reached its reversal count");
    const auto& rev = state.reversal_levels_mm;
    const auto k = static_cast<std::size_t>(reversals_for_estimate);
    if (k == 0 || k > rev.size()) throw ProcedureIncomplete("not enough reversals for the estimate");

    const auto first = rev.end() - static_cast<std::ptrdiff_t>(k);
    JndEstimate e;
    e.reversals_used = static_cast<int>(k);
    e.converged_level_mm = std::accumulate(first, rev.end(), 0.0) / static_cast<double>(k);
    if (k > 1) {
        double ss = 0.0;
        for (auto it = first; it != rev.end(); ++it) ss += (*it - e.converged_level_mm) * (*it - e.converged_level_mm);
        e.converged_level_sd_mm = std::sqrt(ss / static_cast<double>(k - 1));
    }
    e.jnd_delta_mm = e.converged_level_mm - reference_mm;
    return e;
}

Staircase::Staircase(StaircaseConfig config, AsrResult asr)
    : config_(std::move(config)), asr_(asr), state_(init_staircase(config_, asr_)) {}

const PairPresentation& Staircase::next_trial() {
    if (state_.complete) throw ProcedureComplete("staircase already complete");
    if (!pending_) {
        const int index = static_cast<int>(state_.trial_log.size());
        const auto reference = StimulusSpec::uniform(config_.channel_set, config_.reference_mm, config_.timing);
        const auto comparison = StimulusSpec::uniform(config_.channel_set, state_.current_comparison_mm, config_.timing);
        pending_ = PendingTrial{index, state_.current_comparison_mm,
                                make_pair_schedule(reference, comparison, config_.schedule_seed,
                                                   static_cast<std::uint64_t>(index))};
    }
    return pending_->presentation;
}

TrialOutcome Staircase::score_response(const Response& response) const {
    if (!pending_) throw ProtocolError("no trial is pending");
    return score_judgment(response.judgment, pending_->presentation.reference_first, config_.equal_counts_as);
}

const TrialRecord& Staircase::respond(const Response& response) {
    const TrialOutcome outcome = score_response(response);
    TrialRecord record;
    record.trial_index = pending_->trial_index;
    record.reference_first = pending_->presentation.reference_first;
    record.comparison_mm = pending_->comparison_mm;
    record.response = response;
    record.outcome = outcome;

    if (outcome != TrialOutcome::Discarded) {
        const auto reversals_before = state_.reversal_levels_mm.size();
        state_ = apply_response(std::move(state_), outcome == TrialOutcome::Correct, config_, asr_);
        record.reversal = state_.reversal_levels_mm.size() != reversals_before;
    }
    record.next_comparison_mm = state_.current_comparison_mm;
    pending_.reset();
    state_.trial_log.push_back(record);
    return state_.trial_log.back();
}

void write_trace_csv(std::ostream& out, const StaircaseState& state) {
    out << "trial,level_mm,correct,reversal,discarded\n";
    for (const auto& t : state.trial_log) {
        out << t.trial_index << ',' << format_double(t.comparison_mm) << ',' << (t.scored_correct() ? 1 : 0) << ','
            << (t.reversal ? 1 : 0) << ',' << (t.outcome == TrialOutcome::Discarded ? 1 : 0) << '\n';
    }
}

}  // namespace sumlab
