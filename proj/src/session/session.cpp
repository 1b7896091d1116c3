#include "sumlab/session/session.hpp"

#include "sumlab/session/replay.hpp"

namespace sumlab {

namespace {

std::vector<std::string> to_lines(const std::vector<nlohmann::json>& batch) {
    std::vector<std::string> lines;
    lines.reserve(batch.size());
    for (const auto& e : batch) lines.push_back(e.dump());
    return lines;
}

}  // namespace

Session::Session(std::string id, std::unique_ptr<LogSink> sink) : id_(std::move(id)), sink_(std::move(sink)) {}

std::unique_ptr<Session> Session::create(std::string id, ExperimentConfig config, std::string client_token,
                                         std::unique_ptr<LogSink> sink) {
    SessionEngine engine(id, std::move(config), std::move(client_token));
    std::unique_ptr<Session> session(new Session(std::move(id), std::move(sink)));
    auto lines = to_lines(engine.start());
    session->sink_->write_batch(lines);
    session->publish(std::move(engine), std::move(lines));
    return session;
}

std::unique_ptr<Session> Session::recover(const std::filesystem::path& log_path, bool sync) {
    const LogContents log = read_log_file(log_path);
    ReplayOutcome replayed = replay_log(log, {.require_terminal = false, .strict_tail = false});
    if (replayed.bytes < log.total_bytes) std::filesystem::resize_file(log_path, replayed.bytes);

    std::vector<std::string> lines;
    lines.reserve(replayed.records);
    for (std::size_t i = 0; i < replayed.records; ++i) lines.push_back(log.records[i].line);
    const std::string id = replayed.engine.id();
    std::unique_ptr<Session> session(new Session(id, std::make_unique<FileLogSink>(log_path, sync)));
    session->publish(std::move(replayed.engine), std::move(lines));
    return session;
}

void Session::publish(SessionEngine engine, std::vector<std::string> lines) {
    {
        std::lock_guard lock(state_mutex_);
        engine_ = std::make_shared<const SessionEngine>(std::move(engine));
        for (auto& line : lines) lines_.push_back(std::move(line));
    }
    changed_.notify_all();
}

CommandResult Session::submit(const Command& command) {
    std::lock_guard writer(writer_);
    if (failed_) throw Error("session " + id_ + " stopped after a failed log write");
    const auto current = snapshot();
    SessionEngine next = *current;
    const auto batch = next.handle(command);
    if (batch.empty()) return {true, current->next_seq() - 1, current->phase()};
    auto lines = to_lines(batch);
    try {
        sink_->write_batch(lines);
    } catch (...) {
        failed_ = true;
        throw;
    }
    const CommandResult result{false, next.next_seq() - 1, next.phase()};
    publish(std::move(next), std::move(lines));
    return result;
}

std::shared_ptr<const SessionEngine> Session::snapshot() const {
    std::lock_guard lock(state_mutex_);
    return engine_;
}

std::vector<std::string> Session::lines_since(std::uint64_t from, std::chrono::milliseconds wait) const {
    std::unique_lock lock(state_mutex_);
    if (wait.count() > 0) {
        changed_.wait_for(lock, wait, [&] { return closed_ || lines_.size() > from; });
    }
    if (from >= lines_.size()) return {};
    return {lines_.begin() + static_cast<std::ptrdiff_t>(from), lines_.end()};
}

void Session::close() {
    {
        std::lock_guard lock(state_mutex_);
        closed_ = true;
    }
    changed_.notify_all();
}

bool Session::closed() const {
    std::lock_guard lock(state_mutex_);
    return closed_;
}

}  // namespace sumlab
