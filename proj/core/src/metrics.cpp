#include "avdn/metrics.hpp"

#include <algorithm>

#include "avdn/dataset.hpp"
#include "avdn/errors.hpp"

namespace avdn {

const char* to_string(GpMode mode) {
    return mode == GpMode::path_literal ? "path-literal" : "displacement";
}

GpMode gp_mode_from_string(const std::string& text) {
    if (text == "path-literal" || text == "path_literal") return GpMode::path_literal;
    if (text == "displacement") return GpMode::displacement;
    throw ValidationError("unknown gp mode '" + text + "' (expected path-literal or displacement)");
}

void MetricConfig::validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
        throw ValidationError("iou_threshold must be in (0, 1], got " + std::to_string(iou_threshold));
    }
}

bool success(const ViewArea& final_view, const ViewArea& goal, const MetricConfig& cfg) {
    return iou(final_view, goal) >= cfg.iou_threshold;
}

double success_rate(std::span<const EpisodeResult> results) {
    if (results.empty()) throw ValidationError("success rate of an empty result list is undefined");
    const auto hits = std::count_if(results.begin(), results.end(), [](const EpisodeResult& r) { return r.success; });
    return 100.0 * static_cast<double>(hits) / static_cast<double>(results.size());
}

double spl(std::span<const EpisodeResult> results) {
    if (results.empty()) throw ValidationError("SPL of an empty result list is undefined");
    double total = 0.0;
    for (const EpisodeResult& r : results) {
        if (r.shortest_length < 0.0 || r.taken_length < 0.0) {
            throw ValidationError("episode " + r.episode_id + ": negative path length");
        }
        if (!r.success) continue;
        const double denom = std::max(r.taken_length, r.shortest_length);
        if (!(denom > 0.0)) {
            throw ValidationError("episode " + r.episode_id + ": successful episode with zero shortest and taken length");
        }
        total += r.shortest_length / denom;
    }
    return 100.0 * total / static_cast<double>(results.size());
}

double goal_progress(const Trajectory& traj, const ViewArea& goal, const MetricConfig& cfg) {
    const double remaining = distance(traj.final().center(), goal.center());
    if (cfg.gp_mode == GpMode::path_literal) return path_length(traj) - remaining;
    return distance(traj.start().center(), goal.center()) - remaining;
}

EpisodeResult evaluate_episode(const Episode& episode, const Trajectory& prediction, const MetricConfig& cfg) {
    EpisodeResult r;
    r.episode_id = episode.id;
    r.final_iou = iou(prediction.final(), episode.goal);
    r.success = r.final_iou >= cfg.iou_threshold;
    r.shortest_length = path_length(episode.gt_trajectory);
    r.taken_length = path_length(prediction);
    r.goal_progress = goal_progress(prediction, episode.goal, cfg);
    return r;
}

MetricReport evaluate_split(std::span<const Episode> episodes,
                            const std::map<std::string, Trajectory>& predictions,
                            const MetricConfig& cfg) {
    cfg.validate();
    MetricReport report;
    report.config = cfg;
    report.per_episode.reserve(episodes.size());
    for (const Episode& ep : episodes) {
        const auto it = predictions.find(ep.id);
        if (it == predictions.end()) throw NotFoundError("no prediction for episode " + ep.id);
        report.per_episode.push_back(evaluate_episode(ep, it->second, cfg));
    }
    if (report.per_episode.empty()) throw ValidationError("cannot evaluate an empty split");
    report.sr = success_rate(report.per_episode);
    report.spl = spl(report.per_episode);
    double gp = 0.0;
    for (const EpisodeResult& r : report.per_episode) gp += r.goal_progress;
    report.gp = gp / static_cast<double>(report.per_episode.size());
    return report;
}

}  // namespace avdn
