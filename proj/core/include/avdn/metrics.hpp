#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "avdn/geometry.hpp"

namespace avdn {

struct Episode;

enum class GpMode { path_literal, displacement };

const char* to_string(GpMode mode);
GpMode gp_mode_from_string(const std::string& text);

struct MetricConfig {
    double iou_threshold = 0.4;
    GpMode gp_mode = GpMode::path_literal;

    // Throws ValidationError unless 0 < iou_threshold <= 1.
    void validate() const;
};

// Per-episode outcome: success S_i, shortest length l_i, taken length p_i.
struct EpisodeResult {
    std::string episode_id;
    bool success = false;
    double shortest_length = 0.0;
    double taken_length = 0.0;
    double goal_progress = 0.0;
    double final_iou = 0.0;

    friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

struct MetricReport {
    double spl = 0.0;  // percent
    double sr = 0.0;   // percent
    double gp = 0.0;   // meters, mean over episodes
    std::vector<EpisodeResult> per_episode;
    MetricConfig config;
};

bool success(const ViewArea& final_view, const ViewArea& goal, const MetricConfig& cfg);

// 100 * successes / count. Throws ValidationError on an empty list.
double success_rate(std::span<const EpisodeResult> results);

// 100 * mean(S_i * l_i / max(p_i, l_i)). Throws ValidationError on an empty
// list, negative lengths, or a successful episode with both lengths zero.
double spl(std::span<const EpisodeResult> results);

// May be negative.
double goal_progress(const Trajectory& traj, const ViewArea& goal, const MetricConfig& cfg);

EpisodeResult evaluate_episode(const Episode& episode, const Trajectory& prediction, const MetricConfig& cfg);

// Throws NotFoundError naming the first episode without a prediction.
MetricReport evaluate_split(std::span<const Episode> episodes,
                            const std::map<std::string, Trajectory>& predictions,
                            const MetricConfig& cfg);

}  // namespace avdn
