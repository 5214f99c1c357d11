#include "avdn/session.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "server.hpp"

using namespace avdn;
using json = nlohmann::json;

namespace {

struct Running {
    cli::SessionServer server;
    std::unique_ptr<httplib::Client> http;
    httplib::Client& client;

    explicit Running(cli::ServerOptions opt = {})
        : server(with_any_port(std::move(opt))), http(connect(server)), client(*http) {}

    static cli::ServerOptions with_any_port(cli::ServerOptions opt) {
        opt.port = 0;
        return opt;
    }
    static std::unique_ptr<httplib::Client> connect(cli::SessionServer& s) {
        s.start();
        auto c = std::make_unique<httplib::Client>("127.0.0.1", s.port());
        c->set_read_timeout(10, 0);
        return c;
    }
};

}  // namespace

TEST_CASE("health and session creation") {
    Running r;
    auto health = r.client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

    auto created = r.client.Post("/sessions", R"({"seed": 12})", "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    const json state = json::parse(created->body);
    CHECK(state["phase"] == "awaiting_instruction");
    CHECK(state["session_id"].is_string());

    auto again = r.client.Post("/sessions", "", "application/json");
    REQUIRE(again);
    CHECK(again->status == 201);
    CHECK(json::parse(again->body)["session_id"] != state["session_id"]);

    auto fetched = r.client.Get("/sessions/" + state["session_id"].get<std::string>());
    REQUIRE(fetched);
    CHECK(fetched->status == 200);
    CHECK(json::parse(fetched->body) == state);

    auto map = r.client.Get("/sessions/" + state["session_id"].get<std::string>() + "/map?res=4");
    REQUIRE(map);
    CHECK(map->status == 200);
}

TEST_CASE("error statuses") {
    cli::ServerOptions opt;
    opt.sessions.capacity = 1;
    Running r(opt);
    auto missing = r.client.Post("/sessions/s424242/instructions", R"({"text": "go"})", "application/json");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(r.client.Get("/sessions/nope")->status == 404);

    CHECK(r.client.Post("/sessions", "[1, 2]", "application/json")->status == 400);
    CHECK(r.client.Post("/sessions", "{oops", "application/json")->status == 400);

    auto created = r.client.Post("/sessions", R"({"seed": 3})", "application/json");
    REQUIRE(created);
    REQUIRE(created->status == 201);
    const std::string id = json::parse(created->body)["session_id"];
    CHECK(r.client.Post("/sessions", R"({"seed": 4})", "application/json")->status == 503);

    const std::string path = "/sessions/" + id + "/instructions";
    CHECK(r.client.Post(path, R"({"text": ""})", "application/json")->status == 400);
    CHECK(r.client.Post(path, R"({"words": "go"})", "application/json")->status == 400);

    auto first = r.client.Post(path, R"({"text": "go forward"})", "application/json");
    REQUIRE(first);
    CHECK(first->status == 200);
    const json body = json::parse(first->body);
    CHECK(body["events"].size() >= 1);
    CHECK(body["state"]["phase"] == "awaiting_instruction");

    auto second = r.client.Post(path, R"({"text": "keep going"})", "application/json");
    REQUIRE(second);
    CHECK(json::parse(second->body)["state"]["phase"] == "finished");
    CHECK(r.client.Post(path, R"({"text": "more"})", "application/json")->status == 409);
}

TEST_CASE("event stream replays a finished session and closes") {
    Running r;
    auto created = r.client.Post("/sessions", R"({"seed": 31})", "application/json");
    REQUIRE(created);
    const std::string id = json::parse(created->body)["session_id"];
    const std::string path = "/sessions/" + id + "/instructions";
    r.client.Post(path, R"({"text": "go"})", "application/json");
    r.client.Post(path, R"({"text": "go on"})", "application/json");

    auto stream = r.client.Get("/sessions/" + id + "/events");
    REQUIRE(stream);
    CHECK(stream->status == 200);
    CHECK(stream->get_header_value("Content-Type").find("text/event-stream") != std::string::npos);
    const std::string& text = stream->body;
    CHECK(text.find("event: step") != std::string::npos);
    CHECK(text.find("event: question") != std::string::npos);
    CHECK(text.find("event: stopped") != std::string::npos);
    CHECK(text.find("event: step") < text.find("event: stopped"));

    auto tail = r.client.Get("/sessions/" + id + "/events?from=2");
    REQUIRE(tail);
    CHECK(tail->body.find("\"seq\":0") == std::string::npos);
    CHECK(tail->body.find("event: stopped") != std::string::npos);
}

TEST_CASE("port already in use fails to start") {
    Running r;
    cli::ServerOptions opt;
    opt.port = r.server.port();
    cli::SessionServer clash(opt);
    CHECK_THROWS_AS(clash.start(), std::runtime_error);
}
