#include "server.hpp"

#include <chrono>

#include "avdn/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace avdn::cli {

using json = nlohmann::ordered_json;

namespace {

void send_json(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, json{{"error", message}}.dump());
}

// Maps library exceptions onto HTTP statuses.
template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const NotFoundError& e) {
        send_error(res, 404, e.what());
    } catch (const ProtocolError& e) {
        send_error(res, 409, e.what());
    } catch (const CapacityError& e) {
        send_error(res, 503, e.what());
    } catch (const json::exception& e) {
        send_error(res, 400, std::string("bad request body: ") + e.what());
    } catch (const std::invalid_argument& e) {
        send_error(res, 400, e.what());
    } catch (const FormatError& e) {
        send_error(res, 400, e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, e.what());
    }
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json body = json::parse(req.body);
    if (!body.is_object()) throw ValidationError("request body must be a JSON object");
    return body;
}

}  // namespace

SessionServer::SessionServer(ServerOptions options)
    : options_(std::move(options)),
      registry_(std::make_unique<SessionRegistry>(options_.sessions)),
      http_(std::make_unique<httplib::Server>()),
      next_seed_(options_.seed) {
    install_routes();
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::install_routes() {
    // httplib's default SO_REUSEPORT would let a second server share the port.
    http_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    http_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    http_->Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    http_->Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, json{{"status", "ok"}, {"sessions", registry_->size()}}.dump());
    });

    http_->Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = parse_body(req);
            SessionSnapshot snap;
            if (body.contains("episode")) {
                snap = registry_->open_session_from_stub(body.at("episode").dump());
            } else if (body.contains("seed")) {
                snap = registry_->open_session(body.at("seed").get<std::uint64_t>());
            } else {
                snap = registry_->open_session(next_seed_++);
            }
            send_json(res, 201, snapshot_to_json(snap));
        });
    });

    http_->Post("/sessions/:id/instructions", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const std::string id = req.path_params.at("id");
            registry_->state(id);  // 404 before body validation
            const json body = parse_body(req);
            if (!body.contains("text") || !body.at("text").is_string()) {
                throw ValidationError("body must contain a string field 'text'");
            }
            const auto events = registry_->submit_instruction(id, body.at("text").get<std::string>());
            json list = json::array();
            for (const auto& e : events) list.push_back(json::parse(e.json));
            json out{{"events", std::move(list)}, {"state", json::parse(snapshot_to_json(registry_->state(id)))}};
            send_json(res, 200, out.dump());
        });
    });

    http_->Get("/sessions/:id", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, snapshot_to_json(registry_->state(req.path_params.at("id")))); });
    });

    http_->Get("/sessions/:id/map", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto snap = registry_->state(req.path_params.at("id"));
            std::size_t res_cells = 64;
            if (req.has_param("res")) res_cells = std::stoul(req.get_param_value("res"));
            send_json(res, 200, world_raster_json(snap.task.map_seed, snap.task.world_side, res_cells));
        });
    });

    http_->Get("/sessions/:id/events", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const std::string id = req.path_params.at("id");
            registry_->state(id);
            std::size_t from = 0;
            if (req.has_param("from")) from = std::stoul(req.get_param_value("from"));
            auto next = std::make_shared<std::size_t>(from);
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider("text/event-stream", [this, id, next](std::size_t, httplib::DataSink& sink) {
                while (!stopping_ && sink.is_writable()) {
                    const auto events = registry_->events_since(id, *next, std::chrono::milliseconds(250));
                    for (const auto& e : events) {
                        const std::string frame =
                            std::string("event: ") + to_string(e.kind) + "\ndata: " + e.json + "\n\n";
                        if (!sink.write(frame.data(), frame.size())) return false;
                        *next = e.seq + 1;
                    }
                    const auto snap = registry_->state(id);
                    if (snap.phase == SessionPhase::finished && *next >= snap.event_count) {
                        sink.done();
                        return true;
                    }
                    if (events.empty()) {
                        static const std::string keepalive = ": keepalive\n\n";
                        if (!sink.write(keepalive.data(), keepalive.size())) return false;
                    }
                }
                sink.done();
                return true;
            });
        });
    });
}

void SessionServer::start() {
    if (options_.port == 0) {
        port_ = http_->bind_to_any_port(options_.host);
        if (port_ < 0) throw std::runtime_error("cannot bind " + options_.host);
    } else {
        if (!http_->bind_to_port(options_.host, options_.port)) {
            throw std::runtime_error("cannot bind " + options_.host + ":" + std::to_string(options_.port) +
                                     " (port in use?)");
        }
        port_ = options_.port;
    }
    thread_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
}

void SessionServer::stop() {
    stopping_ = true;
    if (http_) http_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace avdn::cli
