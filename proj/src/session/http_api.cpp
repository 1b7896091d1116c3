#include "sumlab/session/http_api.hpp"

#include <httplib.h>

#include "sumlab/core/config.hpp"

namespace sumlab {

using nlohmann::json;

namespace {

constexpr const char* kPrefix = "/api/v1";

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message,
                const std::string& field = {}) {
    json body = {{"error", kind}, {"message", message}};
    if (!field.empty()) body["field"] = field;
    send_json(res, status, body);
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) throw ConfigError("<body>", "request body is not valid JSON");
    return body;
}

json pending_json(const SessionEngine& engine) {
    return engine.pending() ? presentation_to_json(*engine.pending()) : json(nullptr);
}

json status_json(const SessionEngine& engine) {
    return {{"session_id", engine.id()},
            {"phase", to_string(engine.phase())},
            {"next_seq", engine.next_seq()},
            {"clock_ms", engine.clock_ms()},
            {"pending", pending_json(engine)},
            {"awaiting_placements", engine.phase() == Phase::Ordering && !engine.pending() &&
                                        engine.ordering() && engine.ordering()->all_presented()},
            {"summary", engine.summary()}};
}

// Runs a handler and maps engine errors onto HTTP statuses.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const ConfigError& e) {
            send_error(res, 400, "invalid_request", e.what(), e.field());
        } catch (const ProtocolError& e) {
            send_error(res, 409, "conflict", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

}  // namespace

ApiServer::ApiServer(SessionStore& store, ApiOptions options)
    : store_(store), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    const int workers = std::max(1, options_.workers);
    server_->new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<std::size_t>(workers)); };
    server_->set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    routes();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
    int port = options_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(options_.host);
        if (port < 0) throw Error("cannot bind " + options_.host);
    } else if (!server_->bind_to_port(options_.host, port)) {
        throw Error("cannot bind " + options_.host + ":" + std::to_string(port));
    }
    return port;
}

void ApiServer::serve() { server_->listen_after_bind(); }

void ApiServer::stop() {
    store_.close_all();
    if (server_->is_running()) server_->stop();
}

void ApiServer::routes() {
    auto& svr = *server_;
    const std::string p = kPrefix;
    const std::string session = p + R"(/sessions/([A-Za-z0-9_-]+))";

    auto find = [this](const httplib::Request& req, httplib::Response& res) -> std::shared_ptr<Session> {
        auto s = store_.get(req.matches[1]);
        if (!s) send_error(res, 404, "not_found", "no session " + std::string(req.matches[1]));
        return s;
    };

    svr.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID");
        res.status = 204;
    });

    svr.Get(p + "/health", guarded([this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}, {"sessions", store_.ids().size()}});
    }));

    svr.Post(p + "/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        if (!body.is_object()) throw ConfigError("<body>", "expected an object");
        ExperimentConfig config;
        if (body.contains("config")) config = config_from_json(body["config"]);
        std::string token;
        if (body.contains("client_token")) {
            if (!body["client_token"].is_string()) throw ConfigError("client_token", "expected a string");
            token = body["client_token"].get<std::string>();
        }
        const auto created = store_.create(config, token);
        json out = status_json(*created.session->snapshot());
        out["created"] = created.created;
        send_json(res, created.created ? 201 : 200, out);
    }));

    svr.Get(p + "/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& id : store_.ids()) {
            const auto engine = store_.get(id)->snapshot();
            list.push_back({{"session_id", id}, {"phase", to_string(engine->phase())}});
        }
        send_json(res, 200, {{"sessions", list}});
    }));

    svr.Get(session, guarded([find](const httplib::Request& req, httplib::Response& res) {
        if (auto s = find(req, res)) send_json(res, 200, status_json(*s->snapshot()));
    }));

    svr.Get(session + "/pending", guarded([find](const httplib::Request& req, httplib::Response& res) {
        if (auto s = find(req, res)) {
            const auto engine = s->snapshot();
            send_json(res, 200, {{"phase", to_string(engine->phase())}, {"pending", pending_json(*engine)}});
        }
    }));

    auto submit = [](Session& s, const Command& command, httplib::Response& res) {
        const CommandResult r = s.submit(command);
        const auto engine = s.snapshot();
        send_json(res, 200,
                  {{"duplicate", r.duplicate},
                   {"last_seq", r.last_seq},
                   {"phase", to_string(r.phase)},
                   {"pending", pending_json(*engine)}});
    };

    svr.Post(session + "/responses", guarded([find, submit](const httplib::Request& req, httplib::Response& res) {
        if (auto s = find(req, res)) submit(*s, command_from_json(parse_body(req)), res);
    }));

    svr.Post(session + "/abort", guarded([find, submit](const httplib::Request& req, httplib::Response& res) {
        if (auto s = find(req, res)) {
            json body = parse_body(req);
            if (!body.is_object()) throw ConfigError("<body>", "expected an object");
            body["kind"] = "abort";
            submit(*s, command_from_json(body), res);
        }
    }));

    svr.Get(session + "/summary", guarded([find](const httplib::Request& req, httplib::Response& res) {
        if (auto s = find(req, res)) send_json(res, 200, s->snapshot()->summary());
    }));

    svr.Get(session + R"(/trace/(1site|2site)\.csv)", guarded([find](const httplib::Request& req, httplib::Response& res) {
        auto s = find(req, res);
        if (!s) return;
        const std::string csv = trace_csv(*s->snapshot(), req.matches[2] == "1site" ? 1 : 2);
        if (csv.empty()) {
            send_error(res, 404, "not_found", "procedure has not started");
            return;
        }
        res.set_content(csv, "text/csv");
    }));

    // Server-sent events: one event per committed log record, `id` = seq.
    // Resumes after Last-Event-ID (or from ?from=). With ?follow=0 the
    // stream ends once it has caught up; otherwise it ends after the
    // session reaches a terminal phase.
    svr.Get(session + "/events", guarded([this, find](const httplib::Request& req, httplib::Response& res) {
        auto s = find(req, res);
        if (!s) return;
        std::uint64_t from = 0;
        try {
            if (req.has_header("Last-Event-ID")) {
                from = std::stoull(req.get_header_value("Last-Event-ID")) + 1;
            } else if (req.has_param("from")) {
                from = std::stoull(req.get_param_value("from"));
            }
        } catch (const std::exception&) {
            throw ConfigError("Last-Event-ID", "expected a sequence number");
        }
        const bool follow = req.get_param_value("follow") != "0";
        const auto keepalive = options_.keepalive;
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream", [s, from, follow, keepalive](std::size_t, httplib::DataSink& sink) mutable {
                const bool terminal = is_terminal(s->snapshot()->phase());
                const auto lines = s->lines_since(from, follow && !terminal ? keepalive : std::chrono::milliseconds{0});
                std::string chunk;
                for (const auto& line : lines) {
                    const json e = json::parse(line);
                    chunk += "id: " + std::to_string(from++) + "\nevent: " + e.value("type", "message") + "\ndata: " +
                             line + "\n\n";
                }
                if (chunk.empty() && follow && !terminal && !s->closed()) chunk = ": keep-alive\n\n";
                if (!chunk.empty() && !sink.write(chunk.data(), chunk.size())) return false;
                if (lines.empty() && (!follow || terminal || s->closed())) sink.done();
                return true;
            });
    }));
}

}  // namespace sumlab
