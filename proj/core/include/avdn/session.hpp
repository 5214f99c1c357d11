#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "avdn/agents.hpp"
#include "avdn/dataset.hpp"
#include "avdn/simulator.hpp"

namespace avdn {

enum class SessionPhase { awaiting_instruction, agent_flying, finished };

const char* to_string(SessionPhase phase);

enum class SessionEventKind { step, question, stopped };

const char* to_string(SessionEventKind kind);

// One pushed event. `json` is the full wire payload, including `seq` and `type`.
struct SessionEvent {
    std::size_t seq = 0;
    SessionEventKind kind = SessionEventKind::step;
    std::string json;
};

using PolicyFactory = std::function<std::shared_ptr<const Policy>(const Episode& task)>;

struct SessionConfig {
    std::size_t capacity = 64;
    int step_budget = 1;  // moves per instruction round
    double step_max = 30.0;
    double iou_threshold = 0.4;
    std::size_t obs_resolution = 16;  // must match the policy's checkpoint
    GeneratorConfig generator;
    std::optional<std::filesystem::path> transcript_dir;
    PolicyFactory policy;  // empty → oracle autopilot toward the task goal

    void validate() const;
};

struct SessionSnapshot {
    std::string id;
    SessionPhase phase = SessionPhase::awaiting_instruction;
    Episode task;  // start, goal, map; dialog and trajectory are the session's own
    std::vector<ViewArea> views;
    std::vector<DialogRound> dialog;
    std::optional<StopReason> stop_reason;
    std::size_t event_count = 0;
};

// Full state document served to clients; positions and polygon vertices are
// computed here, never by the client.
std::string snapshot_to_json(const SessionSnapshot& snapshot, const MetricConfig& metrics = {});

// Terrain sampled on a res×res grid over the world, row 0 at the north edge.
std::string world_raster_json(std::uint64_t map_seed, double world_side, std::size_t resolution);

class SessionRegistry {
public:
    explicit SessionRegistry(SessionConfig cfg = {});
    ~SessionRegistry();
    SessionRegistry(const SessionRegistry&) = delete;
    SessionRegistry& operator=(const SessionRegistry&) = delete;

    // Throws CapacityError when full.
    SessionSnapshot open_session(std::uint64_t seed);
    // Throws FormatError/ValidationError for a bad stub.
    SessionSnapshot open_session_from_stub(const std::string& stub_json);

    // Throws NotFoundError, ProtocolError (wrong phase) or ValidationError
    // (empty text); the session is unchanged on error.
    std::vector<SessionEvent> submit_instruction(const std::string& id, const std::string& text);

    SessionSnapshot state(const std::string& id) const;

    // Events with seq ≥ from; waits up to `wait` when none are available yet.
    std::vector<SessionEvent> events_since(const std::string& id, std::size_t from,
                                           std::chrono::milliseconds wait = std::chrono::milliseconds(0)) const;

    // The finished session as an Episode record. ProtocolError before finish.
    Episode to_episode(const std::string& id) const;

    std::size_t size() const;
    const SessionConfig& config() const { return cfg_; }

private:
    struct Session;

    std::shared_ptr<Session> find(const std::string& id) const;
    SessionSnapshot add(Episode task);

    SessionConfig cfg_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_id_ = 1;
};

}  // namespace avdn
