#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "avdn/session.hpp"

namespace httplib {
class Server;
}

namespace avdn::cli {

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 → pick a free port
    std::uint64_t seed = 0;  // sessions created without a seed use seed, seed+1, ...
    SessionConfig sessions;
};

// HTTP front end of a SessionRegistry.
//   POST /sessions                     {"seed": n} | {"episode": stub} | {} → 201 state
//   POST /sessions/{id}/instructions   {"text": "..."} → 200 {"events", "state"}
//   GET  /sessions/{id}                → state
//   GET  /sessions/{id}/events?from=k  → text/event-stream of step/question/stopped
//   GET  /sessions/{id}/map?res=n      → terrain raster
//   GET  /health
// Errors: 400 bad body, 404 unknown session, 409 wrong phase, 503 at capacity.
class SessionServer {
public:
    explicit SessionServer(ServerOptions options);
    ~SessionServer();
    SessionServer(const SessionServer&) = delete;
    SessionServer& operator=(const SessionServer&) = delete;

    // Binds and serves on a background thread. Throws std::runtime_error when
    // the port cannot be bound.
    void start();
    void stop();
    int port() const { return port_; }
    SessionRegistry& registry() { return *registry_; }

private:
    void install_routes();

    ServerOptions options_;
    std::unique_ptr<SessionRegistry> registry_;
    std::unique_ptr<httplib::Server> http_;
    std::thread thread_;
    std::atomic<std::uint64_t> next_seed_;
    std::atomic<bool> stopping_{false};
    int port_ = 0;
};

}  // namespace avdn::cli
