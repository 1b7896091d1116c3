#include "sumlab/session/store.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace sumlab {

namespace {

constexpr const char* kIndexFile = "index.ndjson";

// "s-000042" -> 42; 0 for names of another shape.
std::uint64_t id_number(const std::string& id) {
    if (id.size() < 3 || id.compare(0, 2, "s-") != 0) return 0;
    std::uint64_t n = 0;
    for (std::size_t i = 2; i < id.size(); ++i) {
        if (id[i] < '0' || id[i] > '9') return 0;
        n = n * 10 + static_cast<std::uint64_t>(id[i] - '0');
    }
    return n;
}

}  // namespace

SessionStore::SessionStore(std::optional<std::filesystem::path> dir, bool sync) : dir_(std::move(dir)), sync_(sync) {
    if (dir_) {
        std::filesystem::create_directories(*dir_);
        load();
    }
}

void SessionStore::load() {
    std::vector<std::filesystem::path> logs;
    for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ndjson" && entry.path().filename() != kIndexFile) {
            logs.push_back(entry.path());
        }
    }
    std::sort(logs.begin(), logs.end());
    for (const auto& path : logs) {
        counter_ = std::max(counter_, id_number(path.stem().string()));
        try {
            std::shared_ptr<Session> session = Session::recover(path, sync_);
            const auto engine = session->snapshot();
            if (!engine->client_token().empty()) by_token_[engine->client_token()] = session->id();
            order_.push_back(session->id());
            sessions_[session->id()] = std::move(session);
        } catch (const std::exception& e) {
            unrecoverable_.emplace_back(path, e.what());
        }
    }
    // The index is derived data; rewrite it from the logs that recovered.
    std::ofstream index(*dir_ / kIndexFile, std::ios::trunc);
    for (const auto& id : order_) {
        index << nlohmann::json{{"session_id", id}, {"client_token", sessions_[id]->snapshot()->client_token()}}.dump()
              << '\n';
    }
}

std::string SessionStore::next_id() {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s-%06llu", static_cast<unsigned long long>(++counter_));
    return buf;
}

SessionStore::Created SessionStore::create(const ExperimentConfig& config, const std::string& client_token) {
    config.validate();
    std::lock_guard lock(mutex_);
    if (!client_token.empty()) {
        if (auto it = by_token_.find(client_token); it != by_token_.end()) return {sessions_.at(it->second), false};
    }
    const std::string id = next_id();
    std::unique_ptr<LogSink> sink;
    if (dir_) {
        sink = std::make_unique<FileLogSink>(*dir_ / (id + ".ndjson"), sync_);
    } else {
        sink = std::make_unique<MemoryLogSink>();
    }
    std::shared_ptr<Session> session = Session::create(id, config, client_token, std::move(sink));
    if (dir_) {
        // After the header: a crash in between leaves a log the next load indexes.
        std::ofstream index(*dir_ / kIndexFile, std::ios::app);
        index << nlohmann::json{{"session_id", id}, {"client_token", client_token}}.dump() << '\n';
    }
    if (!client_token.empty()) by_token_[client_token] = id;
    order_.push_back(id);
    sessions_[id] = session;
    return {session, true};
}

std::shared_ptr<Session> SessionStore::get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::string> SessionStore::ids() const {
    std::lock_guard lock(mutex_);
    return order_;
}

void SessionStore::close_all() {
    std::lock_guard lock(mutex_);
    for (auto& [id, session] : sessions_) session->close();
}

}  // namespace sumlab
