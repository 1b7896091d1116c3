#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "sumlab/core/config.hpp"
#include "sumlab/session/http_api.hpp"
#include "sumlab/session/simulation.hpp"

using namespace sumlab;
using nlohmann::json;

namespace {

ExperimentConfig fast_config() {
    ExperimentConfig c;
    c.seed = 17;
    c.logging.drive_device = false;
    c.logging.force_log_hz = 0;
    return c;
}

class ApiTest : public ::testing::Test {
protected:
    void SetUp() override {
        server_ = std::make_unique<ApiServer>(store_, ApiOptions{.host = "127.0.0.1", .port = 0, .workers = 4,
                                                                 .keepalive = std::chrono::milliseconds(200)});
        port_ = server_->bind();
        thread_ = std::thread([this] { server_->serve(); });
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
        client_->set_read_timeout(10, 0);
    }
    void TearDown() override {
        server_->stop();
        thread_.join();
    }

    json post(const std::string& path, const json& body, int expect_status) {
        auto res = client_->Post("/api/v1" + path, body.dump(), "application/json");
        EXPECT_TRUE(res) << path;
        if (!res) return {};
        EXPECT_EQ(res->status, expect_status) << path << " " << res->body;
        return json::parse(res->body);
    }
    json get(const std::string& path, int expect_status = 200) {
        auto res = client_->Get("/api/v1" + path);
        EXPECT_TRUE(res) << path;
        if (!res) return {};
        EXPECT_EQ(res->status, expect_status) << path << " " << res->body;
        return json::parse(res->body);
    }
    std::string create(const std::string& token = {}) {
        json body = {{"config", config_to_json(fast_config())}};
        if (!token.empty()) body["client_token"] = token;
        return post("/sessions", body, 201)["session_id"];
    }

    SessionStore store_;
    std::unique_ptr<ApiServer> server_;
    int port_ = 0;
    std::thread thread_;
    std::unique_ptr<httplib::Client> client_;
};

// Parses an SSE body into (id, event, data) triples.
struct SseEvent {
    std::uint64_t id;
    std::string event;
    json data;
};

std::vector<SseEvent> parse_sse(const std::string& body) {
    std::vector<SseEvent> out;
    std::size_t pos = 0;
    while (pos < body.size()) {
        const std::size_t end = body.find("\n\n", pos);
        if (end == std::string::npos) break;
        const std::string block = body.substr(pos, end - pos);
        pos = end + 2;
        if (block.rfind(":", 0) == 0) continue;  // comment
        SseEvent e{};
        std::istringstream in(block);
        for (std::string line; std::getline(in, line);) {
            if (line.rfind("id: ", 0) == 0) e.id = std::stoull(line.substr(4));
            if (line.rfind("event: ", 0) == 0) e.event = line.substr(7);
            if (line.rfind("data: ", 0) == 0) e.data = json::parse(line.substr(6));
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

TEST_F(ApiTest, Health) {
    const json h = get("/health");
    EXPECT_EQ(h["status"], "ok");
    EXPECT_EQ(h["sessions"], 0);
}

TEST_F(ApiTest, CreateIsIdempotentByClientToken) {
    const json body = {{"client_token", "bench-3"}};
    const json first = post("/sessions", body, 201);
    const json again = post("/sessions", body, 200);
    EXPECT_TRUE(first["created"]);
    EXPECT_FALSE(again["created"]);
    EXPECT_EQ(first["session_id"], again["session_id"]);
    EXPECT_EQ(first["phase"], "ASR");
    EXPECT_EQ(first["pending"]["kind"], "asr");
    EXPECT_EQ(get("/sessions")["sessions"].size(), 1u);
}

TEST_F(ApiTest, InvalidConfigNamesTheField) {
    json config = config_to_json(fast_config());
    config["device"]["stroke_mm"] = 0;
    const json err = post("/sessions", {{"config", config}}, 400);
    EXPECT_EQ(err["field"], "device.stroke_mm");
    EXPECT_EQ(get("/sessions")["sessions"].size(), 0u);

    auto res = client_->Post("/api/v1/sessions", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
}

TEST_F(ApiTest, UnknownSessionIs404) {
    EXPECT_EQ(get("/sessions/s-999999", 404)["error"], "not_found");
    post("/sessions/s-999999/responses", {{"kind", "abort"}}, 404);
}

TEST_F(ApiTest, ProtocolViolationsAre409AndDuplicatesAreFlagged) {
    const std::string id = create();
    const json pending = get("/sessions/" + id + "/pending")["pending"];
    post("/sessions/" + id + "/responses", {{"kind", "judgment"}, {"judgment", "equal"}}, 409);
    post("/sessions/" + id + "/responses",
         {{"kind", "asr"}, {"signal", "detected"}, {"presentation_id", pending["id"].get<int>() + 5}}, 409);
    post("/sessions/" + id + "/responses", {{"kind", "asr"}, {"signal", "sideways"}}, 400);

    const json cmd = {{"kind", "asr"}, {"signal", "not_detected"}, {"presentation_id", pending["id"]}, {"token", "k1"}};
    const json first = post("/sessions/" + id + "/responses", cmd, 200);
    const json again = post("/sessions/" + id + "/responses", cmd, 200);
    EXPECT_FALSE(first["duplicate"]);
    EXPECT_TRUE(again["duplicate"]);
    EXPECT_EQ(first["last_seq"], again["last_seq"]);
}

TEST_F(ApiTest, FullSessionOverHttp) {
    const std::string id = create("full");
    const SimulatedParticipant participant(fast_config());
    int commands = 0;
    while (true) {
        const auto engine = store_.get(id)->snapshot();
        const auto command = participant.next(*engine);
        if (!command) break;
        post("/sessions/" + id + "/responses", command_to_json(*command), 200);
        ++commands;
    }
    EXPECT_GT(commands, 40);
    const json status = get("/sessions/" + id);
    EXPECT_EQ(status["phase"], "DONE");
    const json summary = get("/sessions/" + id + "/summary");
    EXPECT_EQ(summary, store_.get(id)->snapshot()->summary());
    EXPECT_TRUE(summary["staircases"]["2site"]["jnd"].is_object());

    auto csv = client_->Get("/api/v1/sessions/" + id + "/trace/1site.csv");
    ASSERT_TRUE(csv);
    EXPECT_EQ(csv->status, 200);
    EXPECT_EQ(csv->get_header_value("Content-Type"), "text/csv");
    EXPECT_EQ(csv->body, trace_csv(*store_.get(id)->snapshot(), 1));

    post("/sessions/" + id + "/abort", {{"reason", "late"}}, 409);
}

TEST_F(ApiTest, TraceOfUnstartedProcedureIs404) {
    const std::string id = create();
    get("/sessions/" + id + "/trace/2site.csv", 404);
}

TEST_F(ApiTest, AbortEndpoint) {
    const std::string id = create();
    const json r = post("/sessions/" + id + "/abort", {{"reason", "participant withdrew"}, {"token", "ab"}}, 200);
    EXPECT_EQ(r["phase"], "ABORTED");
    EXPECT_EQ(get("/sessions/" + id + "/summary")["abort_reason"], "participant withdrew");
}

TEST_F(ApiTest, EventStreamReplaysCommittedRecords) {
    const std::string id = create();
    auto res = client_->Get("/api/v1/sessions/" + id + "/events?follow=0");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    const auto events = parse_sse(res->body);
    const auto lines = store_.get(id)->lines_since(0);
    ASSERT_EQ(events.size(), lines.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        EXPECT_EQ(events[i].id, i);
        EXPECT_EQ(events[i].data.dump(), lines[i]);
        EXPECT_EQ(events[i].event, events[i].data["type"]);
    }

    // Resume after the header.
    auto resumed = client_->Get("/api/v1/sessions/" + id + "/events?follow=0", {{"Last-Event-ID", "0"}});
    ASSERT_TRUE(resumed);
    const auto tail = parse_sse(resumed->body);
    ASSERT_EQ(tail.size(), lines.size() - 1);
    EXPECT_EQ(tail.front().id, 1u);
}

TEST_F(ApiTest, EventStreamFollowsLiveCommitsUntilTerminal) {
    const std::string id = create();
    const std::uint64_t already = store_.get(id)->snapshot()->next_seq();
    std::string body;
    std::thread reader([&] {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(10, 0);
        c.Get("/api/v1/sessions/" + id + "/events", {{"Last-Event-ID", std::to_string(already - 1)}},
              [&](const char* data, std::size_t n) {
                  body.append(data, n);
                  return true;
              });
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    post("/sessions/" + id + "/abort", {{"reason", "stop"}}, 200);
    reader.join();
    const auto events = parse_sse(body);
    ASSERT_FALSE(events.empty());
    EXPECT_EQ(events.front().id, already);
    EXPECT_EQ(events.front().event, "command");
    EXPECT_EQ(events.back().data["to"], "ABORTED");
}

TEST_F(ApiTest, BadLastEventIdIs400) {
    const std::string id = create();
    auto res = client_->Get("/api/v1/sessions/" + id + "/events", {{"Last-Event-ID", "abc"}});
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
}
