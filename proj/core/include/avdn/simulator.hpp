#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avdn/agents.hpp"
#include "avdn/checkpoint.hpp"
#include "avdn/dataset.hpp"
#include "avdn/metrics.hpp"
#include "avdn/report.hpp"

namespace avdn {

struct RolloutConfig {
    std::optional<int> max_steps;  // defaults to the episode's M
    double step_max = 30.0;
    double stop_threshold = 0.5;
    bool record_attention = true;
    std::size_t obs_resolution = 16;

    void validate() const;
};

enum class StopReason { stopped, max_steps };

const char* to_string(StopReason reason);
StopReason stop_reason_from_string(const std::string& text);

struct PredictedTrajectory {
    std::string episode_id;
    Trajectory trajectory{{ViewArea{Vec2{}, 1.0, 0.0}}};
    std::vector<AgentOutput> log;  // one entry per movement
    StopReason stop_reason = StopReason::stopped;

    friend bool operator==(const PredictedTrajectory&, const PredictedTrajectory&) = default;
};

// Applies one decision to `view`: the delta is clipped to step_max, the
// center is kept at least a circumradius from the world edge, and yaw faces
// the applied movement (or takes the output's rotation when it did not move).
ViewArea apply_move(const ViewArea& view, const AgentOutput& output, double step_max, double world_side);

// Closed-loop rollout. At step t rounds [0, t] are visible. Stops when
// stop_prob ≥ threshold or after M moves. Policy errors are rethrown as
// std::runtime_error prefixed with the episode id and step index.
PredictedTrajectory run_episode(const Policy& policy, const Episode& episode, const RolloutConfig& cfg = {});

// Order-preserving; episodes are split across `threads` workers (0 → hardware).
std::vector<PredictedTrajectory> run_split(const Policy& policy, std::span<const Episode> episodes,
                                           const RolloutConfig& cfg = {}, unsigned threads = 0);

// Like run_split, with a per-episode policy (the oracle needs each goal).
std::vector<PredictedTrajectory> run_oracle_split(std::span<const Episode> episodes, const RolloutConfig& cfg = {},
                                                  double iou_threshold = 0.4);

std::string prediction_to_json(const PredictedTrajectory& prediction);
PredictedTrajectory prediction_from_json(std::string_view text, std::size_t line_number = 1);
void save_predictions(std::span<const PredictedTrajectory> predictions, const std::filesystem::path& path);
std::vector<PredictedTrajectory> load_predictions(const std::filesystem::path& path);

// Keyed by episode id; throws FormatError on a duplicate id.
std::map<std::string, Trajectory> predictions_by_id(std::span<const PredictedTrajectory> predictions);

// Evaluates each checkpoint on `episodes`; rows in input order, labeled
// "<kind> (<iteration> iters)".
std::vector<ScoreRow> overfit_report(std::span<const Checkpoint> checkpoints, std::span<const Episode> episodes,
                                       const RolloutConfig& rollout = {}, const MetricConfig& metrics = {});

}  // namespace avdn
