#pragma once

#include <filesystem>

#include "sumlab/session/engine.hpp"
#include "sumlab/session/event_log.hpp"

namespace sumlab {

struct ReplayOptions {
    /// Fail unless the log ends in DONE or ABORTED.
    bool require_terminal = true;
    /// Fail on an uncommitted or torn tail. When false the tail is ignored,
    /// which is what crash recovery wants.
    bool strict_tail = true;
};

struct ReplayOutcome {
    SessionEngine engine;
    std::size_t records = 0;   // records replayed
    std::size_t commands = 0;
    std::size_t bytes = 0;     // log bytes covered by the replayed records
};

/// Rebuilds a session from its log: parses the header, feeds every logged
/// command through a fresh engine and checks that each regenerated record is
/// byte-identical to the logged line. Throws ReplayError on a seq gap, an
/// altered or missing record, a torn tail or a missing terminal phase; the
/// error carries the offset of the last record that verified (-1 if none).
ReplayOutcome replay_log(const LogContents& log, const ReplayOptions& options = {});
ReplayOutcome replay_file(const std::filesystem::path& path, const ReplayOptions& options = {});

}  // namespace sumlab
