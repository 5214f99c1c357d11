#include "avdn/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

#include "avdn/errors.hpp"
#include "avdn/rng.hpp"

namespace avdn {

namespace {

constexpr double kEighth = std::numbers::pi / 4.0;

// Relative-turn phrases indexed by the 45° sector of (bearing - yaw), CCW.
constexpr std::array<const char*, 8> kTurnPhrases = {
    "go forward",         "turn slightly left", "turn left",  "turn sharply left",
    "turn around",        "turn sharply right", "turn right", "turn slightly right",
};

// Compass phrases indexed by the 45° sector of the bearing, east = 0.
constexpr std::array<const char*, 8> kCompassPhrases = {
    "head east", "head northeast", "head north", "head northwest",
    "head west", "head southwest", "head south", "head southeast",
};

constexpr std::array<const char*, 4> kQuestions = {
    "which way should i go",
    "where is the destination",
    "should i keep going",
    "how far is it",
};

constexpr const char* kHoverEgo = "stop right here";
constexpr const char* kHoverAllo = "hold this position";

std::size_t sector_of(double radians) {
    const double k = std::round(normalize_angle(radians) / kEighth);
    return static_cast<std::size_t>(k) % 8;
}

std::string distance_phrase(double meters) {
    const long rounded = std::max(5L, std::lround(meters / 5.0) * 5L);
    return "for " + std::to_string(rounded) + " meters";
}

std::string goal_descriptor(std::uint64_t map_seed, Vec2 goal_center) {
    const double v = terrain_value(map_seed, goal_center);
    const char* tone = v > 0.6 ? "bright" : (v < 0.4 ? "dark" : "gray");
    return std::string("the destination is a ") + tone + " area";
}

InstructionStyle draw_style(Rng& rng, const GeneratorConfig& cfg) {
    // P(ego) and P(allo) are the configured marginals and every instruction
    // carries at least one phrase, so P(both) = ego + allo - 1 when positive.
    const double both = std::max(0.0, cfg.egocentric_fraction + cfg.allocentric_fraction - 1.0);
    const double ego_only = cfg.egocentric_fraction - both;
    const double u = rng.uniform();
    if (u < ego_only) return InstructionStyle::egocentric;
    if (u < ego_only + both) return InstructionStyle::mixed;
    return InstructionStyle::allocentric;
}

std::string move_instruction(InstructionStyle style, double relative_turn, double bearing, double meters) {
    const std::string ego = kTurnPhrases[sector_of(relative_turn)];
    const std::string allo = kCompassPhrases[sector_of(bearing)];
    std::string text;
    switch (style) {
        case InstructionStyle::egocentric: text = ego; break;
        case InstructionStyle::allocentric: text = allo; break;
        case InstructionStyle::mixed: text = ego + " and " + allo; break;
    }
    return text + " " + distance_phrase(meters);
}

std::string hover_instruction(InstructionStyle style) {
    switch (style) {
        case InstructionStyle::egocentric: return kHoverEgo;
        case InstructionStyle::allocentric: return kHoverAllo;
        case InstructionStyle::mixed: break;
    }
    return std::string(kHoverEgo) + " and " + kHoverAllo;
}

bool contains_word(std::string_view text, std::string_view word) {
    std::size_t pos = 0;
    while ((pos = text.find(word, pos)) != std::string_view::npos) {
        const bool left_ok = pos == 0 || !std::isalpha(static_cast<unsigned char>(text[pos - 1]));
        const std::size_t end = pos + word.size();
        const bool right_ok = end == text.size() || !std::isalpha(static_cast<unsigned char>(text[end]));
        if (left_ok && right_ok) return true;
        pos = end;
    }
    return false;
}

}  // namespace

const char* to_string(InstructionStyle style) {
    switch (style) {
        case InstructionStyle::egocentric: return "egocentric";
        case InstructionStyle::allocentric: return "allocentric";
        case InstructionStyle::mixed: return "mixed";
    }
    return "egocentric";
}

InstructionStyle instruction_style_from_string(const std::string& text) {
    if (text == "egocentric") return InstructionStyle::egocentric;
    if (text == "allocentric") return InstructionStyle::allocentric;
    if (text == "mixed") return InstructionStyle::mixed;
    throw ValidationError("unknown instruction style '" + text + "'");
}

bool has_egocentric_phrase(InstructionStyle style) { return style != InstructionStyle::allocentric; }
bool has_allocentric_phrase(InstructionStyle style) { return style != InstructionStyle::egocentric; }

InstructionStyle classify_instruction(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    bool ego = false;
    for (std::string_view w : {"forward", "left", "right", "around", "ahead", "back", "here"}) {
        ego = ego || contains_word(lower, w);
    }
    bool allo = false;
    for (std::string_view w : {"north", "south", "east", "west", "northeast", "northwest", "southeast", "southwest",
                               "position"}) {
        allo = allo || contains_word(lower, w);
    }
    if (ego && allo) return InstructionStyle::mixed;
    if (allo) return InstructionStyle::allocentric;
    return InstructionStyle::egocentric;
}

AttentionMask::AttentionMask(std::size_t grid_size, double fill) : size_(grid_size), values_(grid_size * grid_size, fill) {
    if (grid_size == 0) throw ValidationError("attention grid size must be positive");
}

AttentionMask::AttentionMask(std::size_t grid_size, std::vector<double> values)
    : size_(grid_size), values_(std::move(values)) {
    if (grid_size == 0) throw ValidationError("attention grid size must be positive");
    if (values_.size() != grid_size * grid_size) {
        throw ShapeError("attention grid expects " + std::to_string(grid_size * grid_size) + " values, got " +
                         std::to_string(values_.size()));
    }
    for (double v : values_) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("attention value outside [0, 1]");
    }
}

void validate_episode(const Episode& ep) {
    if (ep.id.empty()) throw ValidationError("episode: empty id");
    if (!(ep.world_side > 0.0)) throw ValidationError("episode " + ep.id + ": world_side must be > 0");
    if (ep.max_steps < 1) throw ValidationError("episode " + ep.id + ": max_steps must be >= 1");
    if (ep.dialog.size() > static_cast<std::size_t>(ep.max_steps)) {
        throw ValidationError("episode " + ep.id + ": more dialog rounds than max_steps");
    }
    for (std::size_t i = 0; i < ep.dialog.size(); ++i) {
        if (ep.dialog[i].instruction.empty()) {
            throw ValidationError("episode " + ep.id + ": empty instruction in round " + std::to_string(i));
        }
    }
    if (ep.gt_trajectory.size() != ep.gt_attention.size()) {
        throw ValidationError("episode " + ep.id + ": gt_trajectory and gt_attention lengths differ");
    }
    if (!(ep.gt_trajectory.start() == ep.start_view)) {
        throw ValidationError("episode " + ep.id + ": gt_trajectory does not begin at start_view");
    }
    if (!view_inside_world(ep.goal, ep.world_side)) throw ValidationError("episode " + ep.id + ": goal outside world");
    for (const ViewArea& v : ep.gt_trajectory.views()) {
        if (!view_inside_world(v, ep.world_side)) throw ValidationError("episode " + ep.id + ": view outside world");
    }
    if (!ep.gt_attention.empty()) {
        const std::size_t grid = ep.gt_attention.front().grid_size();
        for (const AttentionMask& m : ep.gt_attention) {
            if (m.grid_size() != grid) throw ShapeError("episode " + ep.id + ": inconsistent attention grid sizes");
        }
    }
}

void GeneratorConfig::validate() const {
    if (!(world_side > 0.0)) throw ValidationError("generator: world_side must be > 0");
    if (!(view_side > 0.0)) throw ValidationError("generator: view_side must be > 0");
    if (max_steps < 1) throw ValidationError("generator: max_steps must be >= 1");
    if (!(step_max > 0.0)) throw ValidationError("generator: step_max must be > 0");
    if (min_goal_distance < 0.0 || max_goal_distance < 0.0) throw ValidationError("generator: negative goal distance");
    if (patch_grid == 0) throw ValidationError("generator: patch_grid must be positive");
    if (!(egocentric_fraction >= 0.0 && egocentric_fraction <= 1.0 && allocentric_fraction >= 0.0 &&
          allocentric_fraction <= 1.0 && egocentric_fraction + allocentric_fraction >= 1.0)) {
        throw ValidationError("generator: style fractions must lie in [0, 1] and sum to at least 1");
    }
    if (max_attempts < 1) throw ValidationError("generator: max_attempts must be >= 1");
}

Episode generate_episode(std::uint64_t seed, const GeneratorConfig& cfg) {
    cfg.validate();
    Rng rng(seed);
    const std::uint64_t map_seed = rng.next_u64();
    const double margin = ViewArea({0.0, 0.0}, cfg.view_side, 0.0).circumradius();
    const double lo = margin;
    const double hi = cfg.world_side - margin;
    const double reach = cfg.max_steps * cfg.step_max;
    const double max_dist = cfg.max_goal_distance > 0.0 ? cfg.max_goal_distance : reach;
    const double min_dist = cfg.min_goal_distance;

    std::optional<Vec2> start_center;
    std::optional<Vec2> goal_center;
    double yaw = 0.0;
    double dist = 0.0;
    double bearing = 0.0;
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        const Vec2 s{rng.uniform(lo, hi), rng.uniform(lo, hi)};
        const double y = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double d = std::sqrt(rng.uniform(min_dist * min_dist, max_dist * max_dist));
        const double b = rng.uniform(0.0, 2.0 * std::numbers::pi);
        if (hi < lo || min_dist > max_dist || d > reach + 1e-9) continue;
        const Vec2 g = s + d * Vec2{std::cos(b), std::sin(b)};
        if (g.x < lo || g.x > hi || g.y < lo || g.y > hi) continue;
        start_center = s;
        goal_center = g;
        yaw = y;
        dist = d;
        bearing = b;
        break;
    }
    if (!goal_center) {
        throw ValidationError("generator: no reachable goal placement after " + std::to_string(cfg.max_attempts) +
                              " attempts (seed " + std::to_string(seed) + ")");
    }

    Episode ep;
    ep.id = "ep-" + std::to_string(seed);
    ep.map_seed = map_seed;
    ep.world_side = cfg.world_side;
    ep.start_view = ViewArea(*start_center, cfg.view_side, yaw);
    ep.start_direction = ep.start_view.rotation();
    ep.goal = ViewArea(*goal_center, cfg.view_side, rng.uniform(0.0, 2.0 * std::numbers::pi));
    ep.max_steps = cfg.max_steps;

    // sub-micrometre offsets count as a goal centred on the start view
    const int moves = dist < 1e-6 ? 0 : static_cast<int>(std::ceil(dist / cfg.step_max - 1e-12));
    std::vector<ViewArea> views{ep.start_view};
    for (int i = 1; i <= moves; ++i) {
        const Vec2 c = i == moves ? *goal_center
                                  : *start_center + (static_cast<double>(i) / moves) * (*goal_center - *start_center);
        views.emplace_back(c, cfg.view_side, bearing);
    }
    ep.gt_trajectory = Trajectory(std::move(views));

    const int rounds = std::max(moves, 1);
    const std::string descriptor = goal_descriptor(map_seed, *goal_center);
    for (int r = 0; r < rounds; ++r) {
        DialogRound round;
        if (r > 0) round.question = kQuestions[rng.index(kQuestions.size())];
        round.style = draw_style(rng, cfg);
        if (moves == 0) {
            round.instruction = hover_instruction(round.style);
        } else {
            const double current_yaw = r == 0 ? yaw : bearing;
            round.instruction = move_instruction(round.style, bearing - current_yaw, bearing, dist / moves);
        }
        if (r == rounds - 1) round.instruction += " " + descriptor;
        ep.dialog.push_back(std::move(round));
    }

    for (const ViewArea& v : ep.gt_trajectory.views()) {
        ep.gt_attention.push_back(goal_attention_mask(v, ep.goal, cfg.patch_grid));
    }
    validate_episode(ep);
    return ep;
}

std::vector<Episode> generate_episodes(std::uint64_t seed, std::size_t count, const GeneratorConfig& cfg) {
    std::vector<Episode> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(generate_episode(seed + i, cfg));
    return out;
}

Observation box_blur(const Observation& obs) {
    const std::size_t r = obs.resolution;
    Observation out = obs;
    const auto clamp_index = [r](std::ptrdiff_t i) {
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(r) - 1));
    };
    for (std::size_t row = 0; row < r; ++row) {
        for (std::size_t col = 0; col < r; ++col) {
            double sum = 0.0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    sum += obs.pixel(clamp_index(static_cast<std::ptrdiff_t>(row) + dr),
                                     clamp_index(static_cast<std::ptrdiff_t>(col) + dc));
                }
            }
            out.pixels[row * r + col] = sum / 9.0;
        }
    }
    return out;
}

AugmentedSample flip_horizontal(AugmentedSample s) {
    const std::size_t r = s.observation.resolution;
    for (std::size_t row = 0; row < r; ++row) {
        auto begin = s.observation.pixels.begin() + static_cast<std::ptrdiff_t>(row * r);
        std::reverse(begin, begin + static_cast<std::ptrdiff_t>(r));
    }
    const std::size_t p = s.mask.grid_size();
    for (std::size_t row = 0; row < p; ++row) {
        for (std::size_t col = 0; col < p / 2; ++col) std::swap(s.mask.at(row, col), s.mask.at(row, p - 1 - col));
    }
    s.waypoint.x = -s.waypoint.x;
    return s;
}

AugmentedSample flip_vertical(AugmentedSample s) {
    const std::size_t r = s.observation.resolution;
    for (std::size_t row = 0; row < r / 2; ++row) {
        std::swap_ranges(s.observation.pixels.begin() + static_cast<std::ptrdiff_t>(row * r),
                         s.observation.pixels.begin() + static_cast<std::ptrdiff_t>((row + 1) * r),
                         s.observation.pixels.begin() + static_cast<std::ptrdiff_t>((r - 1 - row) * r));
    }
    const std::size_t p = s.mask.grid_size();
    for (std::size_t row = 0; row < p / 2; ++row) {
        for (std::size_t col = 0; col < p; ++col) std::swap(s.mask.at(row, col), s.mask.at(p - 1 - row, col));
    }
    s.waypoint.y = -s.waypoint.y;
    return s;
}

AugmentedSample augment(const Observation& obs, const AttentionMask& mask, Vec2 waypoint, const AugmentConfig& cfg,
                        std::uint64_t seed) {
    Rng rng(seed);
    // Every decision is drawn up front so the stream layout never depends on outcomes.
    const bool blur = rng.bernoulli(cfg.blur_probability);
    const bool noise = rng.bernoulli(cfg.noise_probability);
    const bool hflip = rng.bernoulli(cfg.hflip_probability);
    const bool vflip = rng.bernoulli(cfg.vflip_probability);

    AugmentedSample s{blur ? box_blur(obs) : obs, mask, waypoint};
    if (noise) {
        for (double& px : s.observation.pixels) {
            px = std::clamp(px + rng.uniform(-cfg.noise_epsilon, cfg.noise_epsilon), 0.0, 1.0);
        }
    }
    if (hflip) s = flip_horizontal(std::move(s));
    if (vflip) s = flip_vertical(std::move(s));
    return s;
}

DatasetSplit split_dataset(std::span<const Episode> episodes, std::array<double, 3> ratios, std::uint64_t seed) {
    for (double r : ratios) {
        if (!(r > 0.0)) throw ValidationError("split ratios must be positive");
    }
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");
    const std::size_t n = episodes.size();
    if (n < ratios.size()) {
        throw ValidationError("cannot split " + std::to_string(n) + " episodes into 3 non-empty parts");
    }

    // Largest-remainder apportionment, then every part gets at least one.
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double exact = ratios[i] * static_cast<double>(n);
        sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        remainder[i] = exact - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) sizes[order[k % 3]] += 1;
    for (std::size_t i = 0; i < 3; ++i) {
        if (sizes[i] == 0) {
            const auto largest = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
            sizes[largest] -= 1;
            sizes[i] = 1;
        }
    }

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);

    DatasetSplit split;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < sizes[0]; ++i) split.train.push_back(episodes[perm[pos++]]);
    for (std::size_t i = 0; i < sizes[1]; ++i) split.val.push_back(episodes[perm[pos++]]);
    for (std::size_t i = 0; i < sizes[2]; ++i) split.test.push_back(episodes[perm[pos++]]);
    return split;
}

}  // namespace avdn
