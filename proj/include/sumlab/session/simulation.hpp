#pragma once

#include <memory>
#include <optional>
#include <string>

#include "sumlab/observer/observer.hpp"
#include "sumlab/session/session.hpp"

namespace sumlab {

/// Scripted participant driven by the configured observer. Every decision is
/// a pure function of the session state: the noise of a presentation is drawn
/// from a stream keyed by its id, so a recovered session continues exactly as
/// an uninterrupted one would.
class SimulatedParticipant {
public:
    explicit SimulatedParticipant(const ExperimentConfig& config);

    /// The next command for `engine`, or nothing once the session is terminal.
    std::optional<Command> next(const SessionEngine& engine) const;

private:
    Command judge(const Presentation& p) const;
    Command finish_ordering(const SessionEngine& engine) const;

    ExperimentConfig config_;
    Observer observer_;
};

struct SimulationResult {
    std::shared_ptr<const SessionEngine> engine;  // final state
    nlohmann::json summary;
    std::string trace_1site;
    std::string trace_2site;
    Phase phase = Phase::Asr;
    std::uint64_t records = 0;
    std::uint64_t commands = 0;
};

/// Runs one session end to end through the write-ahead path. Logs to `sink`
/// when given.
SimulationResult run_simulated_session(const ExperimentConfig& config, std::unique_ptr<LogSink> sink = nullptr,
                                       const std::string& session_id = "sim");

struct StaircaseRun {
    StaircaseConfig config;
    AsrResult asr;
    StaircaseState state;
    /// Set when the staircase reached its reversal count within the trial cap.
    std::optional<JndEstimate> estimate;
};

/// One ascending series and one staircase (`sites` 1 or 2) against the
/// configured observer on commanded levels, without the session machinery.
/// Much cheaper than a full session; used by sweeps and the acceptance suite.
StaircaseRun simulate_staircase(const ExperimentConfig& config, int sites);

/// Drives an existing session to a terminal phase. Returns commands submitted.
std::uint64_t drive_to_completion(Session& session, const SimulatedParticipant& participant);

}  // namespace sumlab
