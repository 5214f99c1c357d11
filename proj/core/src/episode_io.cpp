#include <fstream>
#include <sstream>

#include "avdn/dataset.hpp"
#include "avdn/errors.hpp"
#include "json_fields.hpp"

namespace avdn {

namespace {

using detail::Fields;
using json = nlohmann::ordered_json;

json dialog_to_json(const DialogRound& r) {
    json j;
    j["question"] = r.question ? json(*r.question) : json(nullptr);
    j["instruction"] = r.instruction;
    j["style"] = to_string(r.style);
    return j;
}

json mask_to_json(const AttentionMask& m) {
    json grid = json::array();
    for (std::size_t row = 0; row < m.grid_size(); ++row) {
        json line = json::array();
        for (std::size_t col = 0; col < m.grid_size(); ++col) line.push_back(m.at(row, col));
        grid.push_back(std::move(line));
    }
    return json{{"grid", std::move(grid)}};
}

AttentionMask mask_from_json(const Fields& f) {
    const Fields grid = f.array("grid");
    const std::size_t p = grid.size();
    if (p == 0) f.fail("grid", "empty attention grid");
    std::vector<double> values;
    values.reserve(p * p);
    for (std::size_t row = 0; row < p; ++row) {
        const Fields line = grid.element(row);
        if (!line.value().is_array() || line.size() != p) grid.fail(std::to_string(row), "attention grid is not square");
        for (std::size_t col = 0; col < p; ++col) {
            const double v = line.element(col).as_number();
            if (!(v >= 0.0 && v <= 1.0)) line.fail(std::to_string(col), "attention value outside [0, 1]");
            values.push_back(v);
        }
    }
    return AttentionMask(p, std::move(values));
}

DialogRound dialog_from_json(const Fields& f) {
    DialogRound r;
    if (f.has("question") && !f.value().at("question").is_null()) r.question = f.string("question");
    r.instruction = f.string("instruction");
    if (r.instruction.empty()) f.fail("instruction", "empty instruction");
    try {
        r.style = instruction_style_from_string(f.string("style"));
    } catch (const ValidationError& e) {
        f.fail("style", e.what());
    }
    return r;
}

Trajectory trajectory_from_json(const Fields& f) {
    const Fields views = f.array("views");
    std::vector<ViewArea> out;
    for (std::size_t i = 0; i < views.size(); ++i) out.push_back(detail::view_from_json(views.element(i)));
    if (out.empty()) f.fail("views", "trajectory has no views");
    return Trajectory(std::move(out));
}

void check_schema(const Fields& f) {
    if (!f.has("schema_version")) f.fail("schema_version", "missing field");
    if (f.integer("schema_version") != kEpisodeSchemaVersion) f.fail("schema_version", "unsupported version");
}

Episode episode_from_fields(const Fields& f, bool stub) {
    check_schema(f);
    Episode ep;
    ep.id = f.string("id");
    ep.map_seed = f.uint64("map_seed");
    ep.world_side = f.number("world_side");
    ep.start_view = detail::view_from_json(f.object("start_view"));
    ep.start_direction = stub && !f.has("start_direction") ? ep.start_view.rotation() : f.number("start_direction");
    ep.goal = detail::view_from_json(f.object("goal"));
    ep.max_steps = static_cast<int>(f.integer("max_steps"));
    if (!stub || f.has("dialog")) {
        const Fields dialog = f.array("dialog");
        for (std::size_t i = 0; i < dialog.size(); ++i) ep.dialog.push_back(dialog_from_json(dialog.element(i)));
    }
    if (!stub || f.has("gt_trajectory")) {
        ep.gt_trajectory = trajectory_from_json(f.object("gt_trajectory"));
    } else {
        ep.gt_trajectory = Trajectory({ep.start_view});
    }
    if (!stub || f.has("gt_attention")) {
        const Fields masks = f.array("gt_attention");
        for (std::size_t i = 0; i < masks.size(); ++i) ep.gt_attention.push_back(mask_from_json(masks.element(i)));
    } else {
        for (const ViewArea& v : ep.gt_trajectory.views()) ep.gt_attention.push_back(goal_attention_mask(v, ep.goal));
    }
    try {
        validate_episode(ep);
    } catch (const std::invalid_argument& e) {
        throw FormatError(f.location() + ": " + e.what());
    }
    return ep;
}

}  // namespace

namespace detail {

json view_to_json(const ViewArea& v) {
    return json{{"center_x", v.center().x}, {"center_y", v.center().y}, {"side", v.side()}, {"rotation", v.rotation()}};
}

ViewArea view_from_json(const Fields& f) {
    const double cx = f.number("center_x");
    const double cy = f.number("center_y");
    const double side = f.number("side");
    const double rotation = f.number("rotation");
    try {
        return ViewArea(cx, cy, side, rotation);
    } catch (const ValidationError& e) {
        f.fail("side", e.what());
    }
}

json trajectory_to_json(const Trajectory& t) {
    json views = json::array();
    for (const ViewArea& v : t.views()) views.push_back(view_to_json(v));
    return json{{"views", std::move(views)}};
}

Trajectory parse_trajectory(const Fields& f) { return trajectory_from_json(f); }

json episode_to_json_value(const Episode& ep) {
    json j;
    j["schema_version"] = kEpisodeSchemaVersion;
    j["id"] = ep.id;
    j["map_seed"] = ep.map_seed;
    j["world_side"] = ep.world_side;
    j["start_view"] = view_to_json(ep.start_view);
    j["start_direction"] = ep.start_direction;
    j["goal"] = view_to_json(ep.goal);
    j["max_steps"] = ep.max_steps;
    json dialog = json::array();
    for (const DialogRound& r : ep.dialog) dialog.push_back(dialog_to_json(r));
    j["dialog"] = std::move(dialog);
    j["gt_trajectory"] = trajectory_to_json(ep.gt_trajectory);
    json masks = json::array();
    for (const AttentionMask& m : ep.gt_attention) masks.push_back(mask_to_json(m));
    j["gt_attention"] = std::move(masks);
    return j;
}

Episode episode_from_json_value(const json& value, std::size_t line_number) {
    return episode_from_fields(Fields(value, line_number), false);
}

}  // namespace detail

std::string episode_to_json(const Episode& episode) { return detail::episode_to_json_value(episode).dump(); }

Episode episode_from_json(std::string_view text, std::size_t line_number) {
    return episode_from_fields(Fields(detail::parse_line(text, line_number), line_number), false);
}

Episode episode_from_stub_json(std::string_view text) {
    json value = detail::parse_line(text, 1);
    if (value.is_object() && !value.contains("schema_version")) value["schema_version"] = kEpisodeSchemaVersion;
    if (value.is_object() && !value.contains("id")) value["id"] = "stub";
    return episode_from_fields(Fields(value, 1), true);
}

void save_episodes(std::span<const Episode> episodes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const Episode& ep : episodes) out << episode_to_json(ep) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Episode> load_episodes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<Episode> out;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(episode_from_json(line, line_number));
    }
    return out;
}

}  // namespace avdn
