#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "sumlab/session/store.hpp"

namespace httplib {
class Server;
}

namespace sumlab {

struct ApiOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    int workers = 8;
    /// How long an event stream waits for new records before a keep-alive.
    std::chrono::milliseconds keepalive{5000};
};

/// REST and server-sent-events interface to a SessionStore, under /api/v1.
/// See docs/api.md for the routes.
class ApiServer {
public:
    ApiServer(SessionStore& store, ApiOptions options);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds the socket. Returns the bound port. Throws Error on failure.
    int bind();
    /// Serves until `stop`. Requires `bind`.
    void serve();
    void stop();

private:
    void routes();

    SessionStore& store_;
    ApiOptions options_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace sumlab
