#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sumlab {

/// Session logs are newline-delimited JSON. Line 1 is the header record;
/// every record carries `seq` (0, 1, 2, ... without gaps), `t_ms` and `type`.
/// Records are written in batches, one per accepted command, and the last
/// record of each batch has `"commit": true`. Only committed batches count.
inline constexpr std::string_view kLogFormat = "sumlab-session-log";
inline constexpr int kLogVersion = 1;

/// Raised by a sink's crash plan to emulate the process dying mid-write.
class InjectedCrash : public std::runtime_error {
public:
    InjectedCrash() : std::runtime_error("injected crash") {}
};

/// Kill the writer once `after_records` more records have been written.
/// With `torn`, the next record is also written halfway, without newline.
struct CrashPlan {
    std::size_t after_records = 0;
    bool torn = false;
};

class LogSink {
public:
    virtual ~LogSink() = default;
    /// Appends one batch. Durable on return.
    virtual void write_batch(const std::vector<std::string>& lines) = 0;
};

class NullLogSink : public LogSink {
public:
    void write_batch(const std::vector<std::string>&) override {}
};

class MemoryLogSink : public LogSink {
public:
    void write_batch(const std::vector<std::string>& lines) override;
    const std::string& text() const noexcept { return text_; }

private:
    std::string text_;
};

class FileLogSink : public LogSink {
public:
    /// Opens `path` for appending. With `sync` every batch is fsync'ed.
    explicit FileLogSink(std::filesystem::path path, bool sync = false);
    ~FileLogSink() override;
    FileLogSink(const FileLogSink&) = delete;
    FileLogSink& operator=(const FileLogSink&) = delete;

    void write_batch(const std::vector<std::string>& lines) override;
    void set_crash_plan(CrashPlan plan) { crash_ = plan; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    void write_raw(std::string_view bytes);

    std::filesystem::path path_;
    int fd_ = -1;
    bool sync_;
    std::optional<CrashPlan> crash_;
    std::size_t written_ = 0;
};

struct LogRecord {
    std::size_t offset = 0;  // byte offset of the line
    std::string line;        // without the newline
    nlohmann::json event;
};

struct LogContents {
    std::vector<LogRecord> records;        // every well-formed line
    std::size_t committed_records = 0;     // prefix ending at the last commit
    std::size_t committed_bytes = 0;
    std::size_t valid_bytes = 0;           // end of the last well-formed line
    std::size_t total_bytes = 0;
};

/// Splits a log into records. Parsing stops at the first line that is not
/// newline-terminated or not a JSON object.
LogContents parse_log(std::string_view text);
LogContents read_log_file(const std::filesystem::path& path);

}  // namespace sumlab
