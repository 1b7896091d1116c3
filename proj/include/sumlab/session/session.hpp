#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sumlab/session/engine.hpp"
#include "sumlab/session/event_log.hpp"

namespace sumlab {

struct CommandResult {
    bool duplicate = false;
    std::uint64_t last_seq = 0;  // last committed seq after the command
    Phase phase = Phase::Asr;
};

/// A live session. Commands are serialised through one writer: each is
/// applied to a copy of the engine, the resulting batch is written to the
/// sink, and only then is the copy published. Readers take an immutable
/// snapshot and never block the writer for longer than a pointer swap.
class Session {
public:
    /// Starts a new session and writes its opening batch.
    static std::unique_ptr<Session> create(std::string id, ExperimentConfig config, std::string client_token,
                                           std::unique_ptr<LogSink> sink);
    /// Reopens a session from its log file. An uncommitted or torn tail is
    /// cut off the file before the log is replayed; later batches append.
    static std::unique_ptr<Session> recover(const std::filesystem::path& log_path, bool sync = false);

    /// Throws ProtocolError when the command does not fit the current state,
    /// or Error once a write has failed (the session is then read-only).
    CommandResult submit(const Command& command);

    std::shared_ptr<const SessionEngine> snapshot() const;
    const std::string& id() const noexcept { return id_; }

    /// Committed log lines with seq >= `from`. Waits up to `wait` when none
    /// are available yet; returns early when the session is closed.
    std::vector<std::string> lines_since(std::uint64_t from, std::chrono::milliseconds wait = {}) const;
    /// Wakes every waiter in `lines_since`.
    void close();
    bool closed() const;

    /// Sink of the session; tests use it to plant crash plans.
    LogSink& sink() noexcept { return *sink_; }

private:
    Session(std::string id, std::unique_ptr<LogSink> sink);
    void publish(SessionEngine engine, std::vector<std::string> lines);

    std::string id_;
    std::unique_ptr<LogSink> sink_;
    std::mutex writer_;
    bool failed_ = false;

    mutable std::mutex state_mutex_;
    mutable std::condition_variable changed_;
    std::shared_ptr<const SessionEngine> engine_;
    std::vector<std::string> lines_;  // index == seq
    bool closed_ = false;
};

}  // namespace sumlab
