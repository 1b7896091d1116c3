#include "sumlab/session/event_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>

#include "sumlab/errors.hpp"

namespace sumlab {

void MemoryLogSink::write_batch(const std::vector<std::string>& lines) {
    for (const auto& line : lines) {
        text_ += line;
        text_ += '\n';
    }
}

FileLogSink::FileLogSink(std::filesystem::path path, bool sync) : path_(std::move(path)), sync_(sync) {
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open log " + path_.string() + ": " + std::strerror(errno));
}

FileLogSink::~FileLogSink() {
    if (fd_ >= 0) ::close(fd_);
}

void FileLogSink::write_raw(std::string_view bytes) {
    while (!bytes.empty()) {
        const ssize_t n = ::write(fd_, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error("write to " + path_.string() + " failed: " + std::strerror(errno));
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

void FileLogSink::write_batch(const std::vector<std::string>& lines) {
    std::string buffer;
    for (const auto& line : lines) {
        if (crash_ && written_ == crash_->after_records) {
            if (crash_->torn) buffer.append(line, 0, line.size() / 2);
            write_raw(buffer);
            throw InjectedCrash();
        }
        buffer += line;
        buffer += '\n';
        ++written_;
    }
    write_raw(buffer);
    if (sync_ && ::fsync(fd_) != 0) throw Error("fsync of " + path_.string() + " failed");
}

LogContents parse_log(std::string_view text) {
    LogContents out;
    out.total_bytes = text.size();
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) break;
        LogRecord rec;
        rec.offset = pos;
        rec.line = std::string(text.substr(pos, nl - pos));
        rec.event = nlohmann::json::parse(rec.line, nullptr, false);
        if (rec.event.is_discarded() || !rec.event.is_object()) break;
        pos = nl + 1;
        out.valid_bytes = pos;
        const bool commit = rec.event.value("commit", false);
        out.records.push_back(std::move(rec));
        if (commit) {
            out.committed_records = out.records.size();
            out.committed_bytes = pos;
        }
    }
    return out;
}

LogContents read_log_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read log " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_log(buffer.str());
}

}  // namespace sumlab
