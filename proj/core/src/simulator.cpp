#include "avdn/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "avdn/errors.hpp"
#include "json_fields.hpp"

namespace avdn {

using detail::Fields;
using detail::json;

void RolloutConfig::validate() const {
    if (!(step_max > 0.0) || !std::isfinite(step_max)) throw ValidationError("step_max must be positive");
    if (max_steps && *max_steps < 1) throw ValidationError("max_steps override must be >= 1");
    if (!(stop_threshold >= 0.0 && stop_threshold <= 1.0)) throw ValidationError("stop_threshold must be in [0, 1]");
    if (obs_resolution == 0) throw ValidationError("obs_resolution must be positive");
}

const char* to_string(StopReason reason) { return reason == StopReason::stopped ? "stopped" : "max_steps"; }

StopReason stop_reason_from_string(const std::string& text) {
    if (text == "stopped") return StopReason::stopped;
    if (text == "max_steps") return StopReason::max_steps;
    throw ValidationError("unknown stop reason '" + text + "'");
}

ViewArea apply_move(const ViewArea& view, const AgentOutput& output, double step_max, double world_side) {
    if (!std::isfinite(output.next_center.x) || !std::isfinite(output.next_center.y)) {
        throw NumericError("policy produced a non-finite waypoint");
    }
    Vec2 delta = output.next_center - view.center();
    const double len = norm(delta);
    if (len > step_max) delta = (step_max / len) * delta;
    const double r = view.circumradius();
    const Vec2 target = view.center() + delta;
    const Vec2 center{std::clamp(target.x, r, world_side - r), std::clamp(target.y, r, world_side - r)};
    const Vec2 moved = center - view.center();
    const double yaw = norm(moved) > 1e-9 ? heading(moved) : output.next_rotation;
    return view.moved_to(center, yaw);
}

PredictedTrajectory run_episode(const Policy& policy, const Episode& episode, const RolloutConfig& cfg) {
    cfg.validate();
    const int m = cfg.max_steps.value_or(episode.max_steps);
    PredictedTrajectory out;
    out.episode_id = episode.id;
    std::vector<ViewArea> views{episode.start_view};
    for (int step = 0;; ++step) {
        const AgentState state =
            make_agent_state(episode, views, static_cast<std::size_t>(step) + 1, cfg.obs_resolution);
        AgentOutput decision;
        try {
            decision = policy.decide(state);
        } catch (const std::exception& e) {
            throw std::runtime_error("episode " + episode.id + " step " + std::to_string(step) + ": " + e.what());
        }
        if (decision.stop_prob >= cfg.stop_threshold) {
            out.stop_reason = StopReason::stopped;
            break;
        }
        if (step == m) {
            out.stop_reason = StopReason::max_steps;
            break;
        }
        views.push_back(apply_move(views.back(), decision, cfg.step_max, episode.world_side));
        if (!cfg.record_attention) decision.attention = AttentionMask(decision.attention.grid_size());
        out.log.push_back(std::move(decision));
    }
    out.trajectory = Trajectory(std::move(views));
    return out;
}

namespace {

template <class Fn>
std::vector<PredictedTrajectory> parallel_rollouts(std::size_t count, unsigned threads, Fn&& run_one) {
    std::vector<PredictedTrajectory> out(count);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    std::vector<std::exception_ptr> errors(threads);
    const auto work = [&](unsigned w) {
        try {
            for (std::size_t i = w; i < count; i += threads) out[i] = run_one(i);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (threads <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace

std::vector<PredictedTrajectory> run_split(const Policy& policy, std::span<const Episode> episodes,
                                           const RolloutConfig& cfg, unsigned threads) {
    return parallel_rollouts(episodes.size(), threads,
                             [&](std::size_t i) { return run_episode(policy, episodes[i], cfg); });
}

std::vector<PredictedTrajectory> run_oracle_split(std::span<const Episode> episodes, const RolloutConfig& cfg,
                                                  double iou_threshold) {
    return parallel_rollouts(episodes.size(), 0, [&](std::size_t i) {
        const Episode& ep = episodes[i];
        const std::size_t grid = ep.gt_attention.empty() ? 4 : ep.gt_attention.front().grid_size();
        return run_episode(OraclePolicy(ep.goal, cfg.step_max, iou_threshold, grid), ep, cfg);
    });
}

namespace {

json mask_to_json(const AttentionMask& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.grid_size(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.grid_size(); ++c) row.push_back(m.at(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

AttentionMask mask_from_json(const Fields& rows) {
    const std::size_t n = rows.size();
    std::vector<double> values;
    for (std::size_t r = 0; r < n; ++r) {
        const Fields row = rows.element(r);
        if (!row.value().is_array() || row.size() != n) {
            throw FormatError(row.location() + ": attention row " + std::to_string(r) + " is not of length " +
                              std::to_string(n));
        }
        for (std::size_t c = 0; c < n; ++c) values.push_back(row.element(c).as_number());
    }
    try {
        return AttentionMask(n, std::move(values));
    } catch (const std::invalid_argument& e) {
        throw FormatError(rows.location() + ": " + e.what());
    }
}

}  // namespace

std::string prediction_to_json(const PredictedTrajectory& p) {
    json log = json::array();
    for (const auto& o : p.log) {
        log.push_back(json{{"next_center", json::array({o.next_center.x, o.next_center.y})},
                           {"next_rotation", o.next_rotation},
                           {"stop_prob", o.stop_prob},
                           {"attention", mask_to_json(o.attention)}});
    }
    json j;
    j["schema_version"] = kEpisodeSchemaVersion;
    j["episode_id"] = p.episode_id;
    j["stop_reason"] = to_string(p.stop_reason);
    j["trajectory"] = detail::trajectory_to_json(p.trajectory);
    j["log"] = std::move(log);
    return j.dump();
}

PredictedTrajectory prediction_from_json(std::string_view text, std::size_t line_number) {
    const json value = detail::parse_line(text, line_number);
    const Fields f(value, line_number);
    if (f.integer("schema_version") != kEpisodeSchemaVersion) f.fail("schema_version", "unsupported version");
    PredictedTrajectory p;
    p.episode_id = f.string("episode_id");
    try {
        p.stop_reason = stop_reason_from_string(f.string("stop_reason"));
    } catch (const ValidationError& e) {
        f.fail("stop_reason", e.what());
    }
    p.trajectory = detail::parse_trajectory(f.object("trajectory"));
    const Fields log = f.array("log");
    for (std::size_t i = 0; i < log.size(); ++i) {
        const Fields entry = log.element(i);
        const Fields center = entry.array("next_center");
        if (center.size() != 2) entry.fail("next_center", "expected 2 numbers");
        AgentOutput o;
        o.next_center = Vec2{center.element(0).as_number(), center.element(1).as_number()};
        o.next_rotation = entry.number("next_rotation");
        o.stop_prob = entry.number("stop_prob");
        o.attention = mask_from_json(entry.array("attention"));
        p.log.push_back(std::move(o));
    }
    if (p.log.size() + 1 != p.trajectory.size()) {
        f.fail("log", "length must be trajectory length - 1");
    }
    return p;
}

void save_predictions(std::span<const PredictedTrajectory> predictions, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const auto& p : predictions) out << prediction_to_json(p) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<PredictedTrajectory> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open file");
    std::vector<PredictedTrajectory> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(prediction_from_json(line, number));
        } catch (const FormatError& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
    }
    return out;
}

std::map<std::string, Trajectory> predictions_by_id(std::span<const PredictedTrajectory> predictions) {
    std::map<std::string, Trajectory> out;
    for (const auto& p : predictions) {
        if (!out.emplace(p.episode_id, p.trajectory).second) {
            throw FormatError("duplicate prediction for episode " + p.episode_id);
        }
    }
    return out;
}

std::vector<ScoreRow> overfit_report(std::span<const Checkpoint> checkpoints, std::span<const Episode> episodes,
                                       const RolloutConfig& rollout, const MetricConfig& metrics) {
    if (checkpoints.empty()) throw ValidationError("overfit_report needs at least one checkpoint");
    std::vector<ScoreRow> rows;
    for (const Checkpoint& ck : checkpoints) {
        const auto policy = make_policy(ck);
        const auto preds = run_split(*policy, episodes, rollout);
        ScoreRow row;
        row.label = std::string(to_string(ck.config.kind)) + " (" + std::to_string(ck.iteration) + " iters)";
        row.iteration = ck.iteration;
        row.train_loss = ck.train_loss;
        row.val_loss = ck.val_loss;
        row.metrics = evaluate_split(episodes, predictions_by_id(preds), metrics);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace avdn
