#include "avdn/session.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "avdn/errors.hpp"
#include "json_fields.hpp"

namespace avdn {

using detail::json;

const char* to_string(SessionPhase phase) {
    switch (phase) {
        case SessionPhase::awaiting_instruction: return "awaiting_instruction";
        case SessionPhase::agent_flying: return "agent_flying";
        case SessionPhase::finished: return "finished";
    }
    return "?";
}

const char* to_string(SessionEventKind kind) {
    switch (kind) {
        case SessionEventKind::step: return "step";
        case SessionEventKind::question: return "question";
        case SessionEventKind::stopped: return "stopped";
    }
    return "?";
}

void SessionConfig::validate() const {
    if (capacity == 0) throw ValidationError("session capacity must be positive");
    if (step_budget < 1) throw ValidationError("step_budget must be >= 1");
    if (!(step_max > 0.0)) throw ValidationError("step_max must be positive");
    generator.validate();
}

namespace {

constexpr const char* kQuestion = "i moved as told . which way now ?";

json vertices_json(const ViewArea& v) {
    json out = json::array();
    const Polygon poly = view_polygon(v);
    for (const Vec2& p : poly.vertices()) out.push_back(json::array({p.x, p.y}));
    return out;
}

json view_json(const ViewArea& v) {
    json j = detail::view_to_json(v);
    j["vertices"] = vertices_json(v);
    return j;
}

json mask_json(const AttentionMask& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.grid_size(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.grid_size(); ++c) row.push_back(m.at(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

bool blank(const std::string& text) {
    return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

struct SessionRegistry::Session {
    mutable std::mutex mutex;
    mutable std::condition_variable changed;
    std::string id;
    Episode task;
    std::vector<ViewArea> views;
    std::vector<DialogRound> dialog;
    SessionPhase phase = SessionPhase::awaiting_instruction;
    std::optional<StopReason> stop_reason;
    std::vector<SessionEvent> events;
    std::shared_ptr<const Policy> policy;
    std::optional<std::filesystem::path> transcript;

    SessionSnapshot snapshot() const {
        return {id, phase, task, views, dialog, stop_reason, events.size()};
    }
};

SessionRegistry::SessionRegistry(SessionConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.transcript_dir) std::filesystem::create_directories(*cfg_.transcript_dir);
}

SessionRegistry::~SessionRegistry() = default;

SessionSnapshot SessionRegistry::add(Episode task) {
    task.dialog.clear();
    task.gt_trajectory = Trajectory({task.start_view});
    task.gt_attention = {goal_attention_mask(task.start_view, task.goal, cfg_.generator.patch_grid)};
    validate_episode(task);

    auto s = std::make_shared<Session>();
    s->task = std::move(task);
    s->views = {s->task.start_view};
    s->policy = cfg_.policy ? cfg_.policy(s->task)
                            : std::make_shared<OraclePolicy>(s->task.goal, cfg_.step_max, cfg_.iou_threshold,
                                                             cfg_.generator.patch_grid);
    std::lock_guard lock(mutex_);
    if (sessions_.size() >= cfg_.capacity) {
        throw CapacityError("session capacity of " + std::to_string(cfg_.capacity) + " reached");
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(next_id_++));
    s->id = buf;
    if (cfg_.transcript_dir) s->transcript = *cfg_.transcript_dir / (s->id + ".events.jsonl");
    sessions_[s->id] = s;
    return s->snapshot();
}

SessionSnapshot SessionRegistry::open_session(std::uint64_t seed) {
    return add(generate_episode(seed, cfg_.generator));
}

SessionSnapshot SessionRegistry::open_session_from_stub(const std::string& stub_json) {
    return add(episode_from_stub_json(stub_json));
}

std::shared_ptr<SessionRegistry::Session> SessionRegistry::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
    return it->second;
}

std::vector<SessionEvent> SessionRegistry::submit_instruction(const std::string& id, const std::string& text) {
    const auto s = find(id);
    std::vector<ViewArea> views;
    std::vector<DialogRound> dialog;
    {
        std::lock_guard lock(s->mutex);
        if (s->phase != SessionPhase::awaiting_instruction) {
            throw ProtocolError(std::string("session ") + id + " is " + to_string(s->phase) +
                                ", not awaiting_instruction");
        }
        if (blank(text)) throw ValidationError("instruction text is empty");
        s->phase = SessionPhase::agent_flying;
        views = s->views;
        dialog = s->dialog;
    }

    // Fly outside the lock so readers observe agent_flying.
    DialogRound round;
    if (!dialog.empty()) round.question = kQuestion;
    round.instruction = text;
    round.style = classify_instruction(text);
    dialog.push_back(round);

    Episode view_of_task = s->task;
    view_of_task.dialog = dialog;
    struct Pending {
        SessionEventKind kind;
        json body;
    };
    std::vector<Pending> pending;
    std::optional<StopReason> reason;
    const auto decide = [&]() {
        const AgentState state = make_agent_state(view_of_task, views, dialog.size(), cfg_.obs_resolution);
        return s->policy->decide(state);
    };
    const auto stopped_body = [&](StopReason why) {
        const double final_iou = iou(views.back(), s->task.goal);
        return json{{"reason", to_string(why)},
                    {"final_iou", final_iou},
                    {"success", final_iou >= cfg_.iou_threshold},
                    {"trajectory_length", views.size()}};
    };
    try {
        for (int k = 0; k < cfg_.step_budget && !reason; ++k) {
            const AgentOutput out = decide();
            if (out.stop_prob >= 0.5) {
                reason = StopReason::stopped;
                break;
            }
            views.push_back(apply_move(views.back(), out, cfg_.step_max, s->task.world_side));
            pending.push_back({SessionEventKind::step,
                               json{{"step", views.size() - 1},
                                    {"view", view_json(views.back())},
                                    {"stop_prob", out.stop_prob},
                                    {"attention", mask_json(out.attention)}}});
        }
        if (!reason && decide().stop_prob >= 0.5) reason = StopReason::stopped;
        if (!reason && dialog.size() >= static_cast<std::size_t>(s->task.max_steps)) reason = StopReason::max_steps;
    } catch (...) {
        std::lock_guard lock(s->mutex);
        s->phase = SessionPhase::awaiting_instruction;
        throw;
    }
    if (reason) {
        pending.push_back({SessionEventKind::stopped, stopped_body(*reason)});
    } else {
        pending.push_back({SessionEventKind::question, json{{"round", dialog.size()}, {"text", kQuestion}}});
    }

    std::vector<SessionEvent> emitted;
    {
        std::lock_guard lock(s->mutex);
        s->views = std::move(views);
        s->dialog = std::move(dialog);
        s->stop_reason = reason;
        s->phase = reason ? SessionPhase::finished : SessionPhase::awaiting_instruction;
        std::ofstream log;
        if (s->transcript) log.open(*s->transcript, std::ios::app);
        for (auto& p : pending) {
            json body{{"seq", s->events.size()}, {"type", to_string(p.kind)}, {"session_id", s->id}};
            for (auto& [k, v] : p.body.items()) body[k] = v;
            SessionEvent ev{s->events.size(), p.kind, body.dump()};
            if (log) log << ev.json << '\n';
            s->events.push_back(ev);
            emitted.push_back(std::move(ev));
        }
        if (reason && cfg_.transcript_dir) {
            Episode ep = s->task;
            ep.id = s->id;
            ep.dialog = s->dialog;
            ep.gt_trajectory = Trajectory(s->views);
            ep.gt_attention.clear();
            for (const auto& v : s->views) {
                ep.gt_attention.push_back(goal_attention_mask(v, ep.goal, cfg_.generator.patch_grid));
            }
            std::ofstream out(*cfg_.transcript_dir / (s->id + ".episode.jsonl"), std::ios::trunc);
            out << episode_to_json(ep) << '\n';
        }
    }
    s->changed.notify_all();
    return emitted;
}

SessionSnapshot SessionRegistry::state(const std::string& id) const {
    const auto s = find(id);
    std::lock_guard lock(s->mutex);
    return s->snapshot();
}

std::vector<SessionEvent> SessionRegistry::events_since(const std::string& id, std::size_t from,
                                                        std::chrono::milliseconds wait) const {
    const auto s = find(id);
    std::unique_lock lock(s->mutex);
    if (s->events.size() <= from && wait.count() > 0) {
        s->changed.wait_for(lock, wait, [&] { return s->events.size() > from; });
    }
    if (s->events.size() <= from) return {};
    return {s->events.begin() + static_cast<std::ptrdiff_t>(from), s->events.end()};
}

Episode SessionRegistry::to_episode(const std::string& id) const {
    const auto s = find(id);
    std::lock_guard lock(s->mutex);
    if (s->phase != SessionPhase::finished) throw ProtocolError("session " + id + " has not finished");
    Episode ep = s->task;
    ep.id = s->id;
    ep.dialog = s->dialog;
    ep.gt_trajectory = Trajectory(s->views);
    ep.gt_attention.clear();
    for (const auto& v : s->views) ep.gt_attention.push_back(goal_attention_mask(v, ep.goal, cfg_.generator.patch_grid));
    validate_episode(ep);
    return ep;
}

std::size_t SessionRegistry::size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

std::string snapshot_to_json(const SessionSnapshot& s, const MetricConfig& metrics) {
    json trajectory = json::array();
    for (const auto& v : s.views) trajectory.push_back(view_json(v));
    json dialog = json::array();
    for (const auto& r : s.dialog) {
        dialog.push_back(json{{"question", r.question ? json(*r.question) : json(nullptr)},
                              {"instruction", r.instruction},
                              {"style", to_string(r.style)}});
    }
    const double current_iou = iou(s.views.back(), s.task.goal);
    json j{{"session_id", s.id},
           {"phase", to_string(s.phase)},
           {"map_seed", s.task.map_seed},
           {"world_side", s.task.world_side},
           {"max_steps", s.task.max_steps},
           {"rounds", s.dialog.size()},
           {"goal", view_json(s.task.goal)},
           {"trajectory", std::move(trajectory)},
           {"dialog", std::move(dialog)},
           {"current_iou", current_iou},
           {"success", current_iou >= metrics.iou_threshold},
           {"stop_reason", s.stop_reason ? json(to_string(*s.stop_reason)) : json(nullptr)},
           {"event_count", s.event_count}};
    return j.dump();
}

std::string world_raster_json(std::uint64_t map_seed, double world_side, std::size_t resolution) {
    if (resolution == 0 || resolution > 1024) throw ValidationError("raster resolution must be in [1, 1024]");
    json rows = json::array();
    const double cell = world_side / static_cast<double>(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        json row = json::array();
        const double y = world_side - (static_cast<double>(i) + 0.5) * cell;
        for (std::size_t k = 0; k < resolution; ++k) {
            row.push_back(terrain_value(map_seed, Vec2{(static_cast<double>(k) + 0.5) * cell, y}));
        }
        rows.push_back(std::move(row));
    }
    return json{{"map_seed", map_seed}, {"world_side", world_side}, {"resolution", resolution}, {"rows", rows}}.dump();
}

}  // namespace avdn
