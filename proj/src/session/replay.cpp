#include "sumlab/session/replay.hpp"

#include <string>

#include "sumlab/core/config.hpp"

namespace sumlab {

namespace {

SessionEngine engine_from_header(const LogRecord& rec) {
    const auto& h = rec.event;
    if (h.value("type", "") != "header" || h.value("seq", -1) != 0) throw ReplayError("first record is not a header", -1);
    if (h.value("format", "") != kLogFormat) throw ReplayError("not a session log", -1);
    if (h.value("version", 0) != kLogVersion) {
        throw ReplayError("unsupported log version " + h.value("version", nlohmann::json()).dump(), -1);
    }
    try {
        return SessionEngine(h.at("session_id").get<std::string>(), config_from_json(h.at("config")),
                             h.value("client_token", ""));
    } catch (const nlohmann::json::exception& e) {
        throw ReplayError(std::string("malformed header: ") + e.what(), -1);
    } catch (const ConfigError& e) {
        throw ReplayError(std::string("header config rejected: ") + e.what(), -1);
    }
}

}  // namespace

ReplayOutcome replay_log(const LogContents& log, const ReplayOptions& options) {
    if (log.records.empty() || log.committed_records == 0) throw ReplayError("log has no committed records", -1);
    const auto& records = log.records;
    const std::size_t usable = options.strict_tail ? records.size() : log.committed_records;
    auto last_valid = [&](std::size_t i) { return i == 0 ? std::ptrdiff_t{-1} : static_cast<std::ptrdiff_t>(records[i - 1].offset); };

    ReplayOutcome out{engine_from_header(records[0]), 0, 0, 0};
    std::size_t i = 0;
    auto verify = [&](const std::vector<nlohmann::json>& batch) {
        for (const auto& regenerated : batch) {
            if (i >= usable) throw ReplayError("log ends inside a batch", last_valid(i));
            const auto& rec = records[i];
            if (rec.event.value("seq", std::uint64_t{0}) != regenerated["seq"].get<std::uint64_t>()) {
                throw ReplayError("seq gap at record " + std::to_string(i), last_valid(i));
            }
            if (regenerated.dump() != rec.line) throw ReplayError("record " + std::to_string(i) + " differs on replay", last_valid(i));
            ++i;
        }
    };

    verify(out.engine.start());
    while (i < usable) {
        const auto& rec = records[i];
        if (rec.event.value("type", "") != "command" || !rec.event.contains("command")) {
            throw ReplayError("unexpected " + rec.event.value("type", std::string("?")) + " record " + std::to_string(i),
                              last_valid(i));
        }
        std::vector<nlohmann::json> batch;
        try {
            batch = out.engine.handle(command_from_json(rec.event["command"]));
        } catch (const ConfigError& e) {
            throw ReplayError(std::string("malformed command: ") + e.what(), last_valid(i));
        } catch (const ProtocolError& e) {
            throw ReplayError(std::string("logged command rejected on replay: ") + e.what(), last_valid(i));
        }
        if (batch.empty()) throw ReplayError("logged command was a duplicate", last_valid(i));
        verify(batch);
        ++out.commands;
    }
    out.records = i;
    out.bytes = i == 0 ? 0 : records[i - 1].offset + records[i - 1].line.size() + 1;
    if (options.strict_tail && log.valid_bytes != log.total_bytes) {
        throw ReplayError("torn record after the last complete line", last_valid(i));
    }
    if (options.strict_tail && log.committed_records != records.size()) {
        throw ReplayError("uncommitted tail", last_valid(i));
    }
    if (options.require_terminal && !is_terminal(out.engine.phase())) {
        throw ReplayError("log ends in phase " + std::string(to_string(out.engine.phase())), last_valid(i));
    }
    return out;
}

ReplayOutcome replay_file(const std::filesystem::path& path, const ReplayOptions& options) {
    return replay_log(read_log_file(path), options);
}

}  // namespace sumlab
