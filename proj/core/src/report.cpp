#include "avdn/report.hpp"

#include <algorithm>
#include <cstdio>

#include "avdn/errors.hpp"
#include "json.hpp"

namespace avdn {

using json = nlohmann::ordered_json;

std::string format_table(std::span<const ScoreRow> rows) {
    std::size_t width = 6;
    for (const auto& r : rows) width = std::max(width, r.label.size());
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %7s  %7s  %7s\n", static_cast<int>(width), "Method", "SPL", "SR", "GP");
    out += buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-*s  %7.2f  %7.2f  %7.2f\n", static_cast<int>(width), r.label.c_str(),
                      r.metrics.spl, r.metrics.sr, r.metrics.gp);
        out += buf;
    }
    return out;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

}  // namespace

std::string report_to_json(std::span<const ScoreRow> rows) {
    json out = json::array();
    for (const auto& r : rows) {
        json episodes = json::array();
        for (const auto& e : r.metrics.per_episode) {
            episodes.push_back(json{{"episode_id", e.episode_id},
                                    {"success", e.success},
                                    {"shortest_length", e.shortest_length},
                                    {"taken_length", e.taken_length},
                                    {"goal_progress", e.goal_progress},
                                    {"final_iou", e.final_iou}});
        }
        out.push_back(json{{"label", r.label},
                           {"iteration", r.iteration ? json(*r.iteration) : json(nullptr)},
                           {"train_loss", optional_number(r.train_loss)},
                           {"val_loss", optional_number(r.val_loss)},
                           {"iou_threshold", r.metrics.config.iou_threshold},
                           {"gp_mode", to_string(r.metrics.config.gp_mode)},
                           {"spl", r.metrics.spl},
                           {"sr", r.metrics.sr},
                           {"gp", r.metrics.gp},
                           {"per_episode", std::move(episodes)}});
    }
    return json{{"rows", std::move(out)}}.dump(2);
}

std::vector<ScoreRow> parse_report(const std::string& text) {
    std::vector<ScoreRow> rows;
    try {
        const json doc = json::parse(text);
        for (const auto& j : doc.at("rows")) {
            ScoreRow r;
            r.label = j.at("label").get<std::string>();
            if (!j.at("iteration").is_null()) r.iteration = j.at("iteration").get<std::int64_t>();
            r.train_loss = read_optional(j, "train_loss");
            r.val_loss = read_optional(j, "val_loss");
            r.metrics.config.iou_threshold = j.at("iou_threshold").get<double>();
            r.metrics.config.gp_mode = gp_mode_from_string(j.at("gp_mode").get<std::string>());
            r.metrics.spl = j.at("spl").get<double>();
            r.metrics.sr = j.at("sr").get<double>();
            r.metrics.gp = j.at("gp").get<double>();
            for (const auto& e : j.at("per_episode")) {
                r.metrics.per_episode.push_back({e.at("episode_id").get<std::string>(), e.at("success").get<bool>(),
                                                 e.at("shortest_length").get<double>(),
                                                 e.at("taken_length").get<double>(),
                                                 e.at("goal_progress").get<double>(), e.at("final_iou").get<double>()});
            }
            rows.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("report: ") + e.what());
    } catch (const ValidationError& e) {
        throw FormatError(std::string("report: ") + e.what());
    }
    return rows;
}

}  // namespace avdn
