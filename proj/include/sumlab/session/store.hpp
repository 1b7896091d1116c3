#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sumlab/session/session.hpp"

namespace sumlab {

/// All sessions of a server. With a directory, each session logs to
/// `<dir>/<id>.ndjson` and `<dir>/index.ndjson` lists them in creation
/// order; opening the store recovers every session from its log. Without a
/// directory, logs are kept in memory.
class SessionStore {
public:
    explicit SessionStore(std::optional<std::filesystem::path> dir = std::nullopt, bool sync = false);

    struct Created {
        std::shared_ptr<Session> session;
        bool created = false;  // false: an existing session with the same client token
    };

    /// Idempotent on a non-empty client token. Throws ConfigError on an invalid config.
    Created create(const ExperimentConfig& config, const std::string& client_token = {});
    std::shared_ptr<Session> get(const std::string& id) const;
    std::vector<std::string> ids() const;

    /// Logs that could not be recovered, with the reason.
    const std::vector<std::pair<std::filesystem::path, std::string>>& unrecoverable() const noexcept {
        return unrecoverable_;
    }

    /// Closes every session, waking event-stream readers.
    void close_all();

private:
    void load();
    std::string next_id();

    std::optional<std::filesystem::path> dir_;
    bool sync_;
    mutable std::mutex mutex_;
    std::uint64_t counter_ = 0;
    std::vector<std::string> order_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::map<std::string, std::string> by_token_;
    std::vector<std::pair<std::filesystem::path, std::string>> unrecoverable_;
};

}  // namespace sumlab
