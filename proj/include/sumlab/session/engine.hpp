#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sumlab/core/asr.hpp"
#include "sumlab/core/config.hpp"
#include "sumlab/device/link.hpp"
#include "sumlab/ordering/ordering.hpp"
#include "sumlab/staircase/staircase.hpp"

namespace sumlab {

enum class Phase : std::uint8_t { Asr, Staircase1Site, Staircase2Site, Ordering, Done, Aborted };

std::string_view to_string(Phase phase);
Phase phase_from_string(std::string_view text);
inline bool is_terminal(Phase phase) { return phase == Phase::Done || phase == Phase::Aborted; }

enum class PresentationKind : std::uint8_t { AsrStimulus, StimulusPair, OrderingPair };

std::string_view to_string(PresentationKind kind);

/// The stimulus (or stimulus pair) currently awaiting a participant action.
struct Presentation {
    std::uint64_t id = 0;
    Phase phase = Phase::Asr;
    PresentationKind kind = PresentationKind::AsrStimulus;
    std::vector<StimulusSpec> stimuli;
    bool reference_first = true;  // StimulusPair only
    int trial_index = 0;          // StimulusPair only
    char label = 0;               // OrderingPair only
    bool replay = false;          // OrderingPair re-presented on request
    /// Mean measured force per channel over each stimulus hold. Empty when
    /// the device is not driven.
    std::vector<std::map<ChannelId, double>> hold_force_n;

    friend bool operator==(const Presentation&, const Presentation&) = default;
};

nlohmann::json presentation_to_json(const Presentation& p);

enum class CommandKind : std::uint8_t { AsrSignal, Judgment, Presented, Replay, Placements, Abort };

/// A participant or operator action. `token` makes submission idempotent:
/// a repeated token is acknowledged without effect.
struct Command {
    CommandKind kind = CommandKind::Judgment;
    std::string token;
    std::optional<std::uint64_t> presentation_id;
    AsrSignal signal = AsrSignal::NotDetected;
    Response response;
    char label = 0;
    std::vector<ContinuumPlacement> placements;
    std::string reason;

    friend bool operator==(const Command&, const Command&) = default;
};

nlohmann::json command_to_json(const Command& command);
/// Throws ConfigError naming the offending field.
Command command_from_json(const nlohmann::json& body);

/// Deterministic session state machine. `start` and `handle` return the
/// batch of log records a step produces; the caller persists the batch
/// before it adopts the new state (apply to a copy, write, then swap).
///
/// Phases: ASR -> STAIRCASE_1SITE -> STAIRCASE_2SITE -> ORDERING -> DONE,
/// with ABORTED reachable from every non-terminal phase.
class SessionEngine {
public:
    SessionEngine(std::string session_id, ExperimentConfig config, std::string client_token = {});

    /// Header record and the first presentation. Call exactly once.
    std::vector<nlohmann::json> start();
    /// Applies one command. Returns an empty batch for an already-seen token.
    /// Throws ProtocolError when the command does not fit the current state.
    std::vector<nlohmann::json> handle(const Command& command);

    const std::string& id() const noexcept { return id_; }
    const std::string& client_token() const noexcept { return client_token_; }
    const ExperimentConfig& config() const noexcept { return config_; }
    Phase phase() const noexcept { return phase_; }
    const std::optional<Presentation>& pending() const noexcept { return pending_; }
    bool seen_token(const std::string& token) const { return tokens_.contains(token); }
    std::uint64_t next_seq() const noexcept { return next_seq_; }
    std::int64_t clock_ms() const noexcept { return clock_ms_; }

    const std::optional<AsrResult>& asr() const noexcept { return asr_result_; }
    /// The staircase of a procedure; `sites` is 1 or 2. Null before it starts.
    const Staircase* staircase(int sites) const;
    const std::optional<OrderingTask>& ordering() const noexcept { return ordering_; }
    /// Labels of every ordering presentation that has been acknowledged, with
    /// its presentation id, in order.
    const std::vector<std::pair<std::uint64_t, char>>& ordering_history() const noexcept { return ordering_history_; }
    std::optional<OrderingMetrics> ordering_metrics() const;
    const std::string& abort_reason() const noexcept { return abort_reason_; }

    /// Result summary; a pure function of the state.
    nlohmann::json summary() const;

private:
    using Batch = std::vector<nlohmann::json>;

    nlohmann::json event(std::string_view type);
    void set_phase(Batch& batch, Phase to, const std::string& reason = {});
    void abort(Batch& batch, const std::string& reason);
    void present(Batch& batch, Presentation presentation);
    std::map<ChannelId, double> drive_stimulus(Batch& batch, std::uint64_t presentation_id, const StimulusSpec& spec);
    void next_asr(Batch& batch);
    void begin_staircase(Batch& batch, int sites);
    void next_pair(Batch& batch);
    void begin_ordering(Batch& batch);
    void next_ordering(Batch& batch);

    void on_asr(Batch& batch, const Command& command);
    void on_judgment(Batch& batch, const Command& command);
    void on_presented(Batch& batch, const Command& command);
    void on_replay(Batch& batch, const Command& command);
    void on_placements(Batch& batch, const Command& command);

    std::string id_;
    ExperimentConfig config_;
    std::string client_token_;
    Phase phase_ = Phase::Asr;
    bool started_ = false;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_presentation_ = 0;
    std::int64_t clock_ms_ = 0;
    std::set<std::string> tokens_;
    std::optional<Presentation> pending_;
    std::optional<DeviceLink> device_;

    std::optional<AsrProcedure> asr_;
    std::optional<AsrResult> asr_result_;
    std::size_t asr_anomalies_ = 0;
    AsrRegistry registry_;
    std::optional<Staircase> staircase1_;
    std::optional<Staircase> staircase2_;
    std::optional<OrderingTask> ordering_;
    std::vector<std::pair<std::uint64_t, char>> ordering_history_;
    std::string abort_reason_;
};

/// Staircase settings of the one-site (`sites` 1) or two-site procedure,
/// anchored on `asr`. The schedule seed is a named substream of the run seed.
StaircaseConfig staircase_config(const ExperimentConfig& config, const AsrResult& asr, int sites);

/// Staircase trace (`write_trace_csv`) of one procedure, empty if absent.
std::string trace_csv(const SessionEngine& engine, int sites);

}  // namespace sumlab
