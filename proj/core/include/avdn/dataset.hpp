#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "avdn/geometry.hpp"

namespace avdn {

inline constexpr int kEpisodeSchemaVersion = 1;

enum class InstructionStyle { egocentric, allocentric, mixed };

const char* to_string(InstructionStyle style);
InstructionStyle instruction_style_from_string(const std::string& text);

struct DialogRound {
    std::optional<std::string> question;  // absent for the initial instruction
    std::string instruction;
    InstructionStyle style = InstructionStyle::egocentric;

    friend bool operator==(const DialogRound&, const DialogRound&) = default;
};

// P×P grid of values in [0, 1], row-major. Row 0 is the forward edge of the
// view, column 0 its left edge.
class AttentionMask {
public:
    explicit AttentionMask(std::size_t grid_size, double fill = 0.0);
    AttentionMask(std::size_t grid_size, std::vector<double> values);

    std::size_t grid_size() const { return size_; }
    double at(std::size_t row, std::size_t col) const { return values_[row * size_ + col]; }
    double& at(std::size_t row, std::size_t col) { return values_[row * size_ + col]; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

private:
    std::size_t size_;
    std::vector<double> values_;
};

// R×R raster of the procedural map over a view, plus the drone heading.
struct Observation {
    std::size_t resolution = 0;
    std::vector<double> pixels;  // row-major, same orientation as AttentionMask
    Vec2 direction;              // (cos yaw, sin yaw)

    double pixel(std::size_t row, std::size_t col) const { return pixels[row * resolution + col]; }

    friend bool operator==(const Observation&, const Observation&) = default;
};

struct Episode {
    std::string id;
    std::uint64_t map_seed = 0;
    double world_side = 0.0;
    ViewArea start_view{Vec2{}, 1.0, 0.0};
    double start_direction = 0.0;
    ViewArea goal{Vec2{}, 1.0, 0.0};
    int max_steps = 1;
    std::vector<DialogRound> dialog;
    Trajectory gt_trajectory{{ViewArea{Vec2{}, 1.0, 0.0}}};
    std::vector<AttentionMask> gt_attention;

    friend bool operator==(const Episode&, const Episode&) = default;
};

// Throws ValidationError naming the violated invariant.
void validate_episode(const Episode& episode);

// ---- procedural map ----

// Terrain lattice spacing of the value-noise field, meters.
inline constexpr double kTerrainCell = 25.0;

// Seeded value-noise scalar field in [0, 1]; defined on the whole plane.
double terrain_value(std::uint64_t map_seed, Vec2 point);

// Samples the terrain at R×R cell centers in the view's body frame.
// Throws ValidationError if the view leaves [0, world_side]^2.
Observation rasterize_observation(std::uint64_t map_seed, double world_side, const ViewArea& view,
                                  std::size_t resolution = 16);

// 1 for every patch cell of `view` that overlaps `goal` with positive area.
AttentionMask goal_attention_mask(const ViewArea& view, const ViewArea& goal, std::size_t grid_size = 4);

// ---- generation ----

struct GeneratorConfig {
    double world_side = 300.0;
    double view_side = 40.0;
    int max_steps = 2;
    double step_max = 30.0;
    double min_goal_distance = 40.0;
    double max_goal_distance = 0.0;  // 0 → max_steps * step_max
    std::size_t patch_grid = 4;
    double egocentric_fraction = 0.82;
    double allocentric_fraction = 0.30;
    int max_attempts = 64;

    void validate() const;
};

// Deterministic in (seed, cfg). Throws ValidationError when no goal placement
// satisfies the constraints within cfg.max_attempts draws.
Episode generate_episode(std::uint64_t seed, const GeneratorConfig& cfg = {});

// Episodes seeded by `seed + i`, ids "ep-<seed+i>".
std::vector<Episode> generate_episodes(std::uint64_t seed, std::size_t count, const GeneratorConfig& cfg = {});

bool has_egocentric_phrase(InstructionStyle style);
bool has_allocentric_phrase(InstructionStyle style);

// Classifies free text by the phrase bank (used for human-typed instructions).
InstructionStyle classify_instruction(std::string_view text);

// ---- augmentation ----

struct AugmentConfig {
    double blur_probability = 0.0;
    double noise_probability = 0.0;
    double noise_epsilon = 0.05;
    double hflip_probability = 0.0;
    double vflip_probability = 0.0;
};

struct AugmentedSample {
    Observation observation;
    AttentionMask mask;
    Vec2 waypoint;  // body-frame (right, forward) meters
};

// 3×3 box blur with clamped edges.
Observation box_blur(const Observation& obs);
// Mirrors left/right: pixel and mask columns reversed, waypoint right-axis negated.
AugmentedSample flip_horizontal(AugmentedSample sample);
// Mirrors front/back: rows reversed, waypoint forward-axis negated.
AugmentedSample flip_vertical(AugmentedSample sample);

AugmentedSample augment(const Observation& obs, const AttentionMask& mask, Vec2 waypoint, const AugmentConfig& cfg,
                        std::uint64_t seed);

// ---- persistence ----

// One JSON object, no trailing newline.
std::string episode_to_json(const Episode& episode);
// Throws FormatError "line N: ... field 'x'".
Episode episode_from_json(std::string_view text, std::size_t line_number = 1);

// Partial record: missing dialog/gt_trajectory/gt_attention get defaults
// (empty dialog, start-only trajectory, goal-overlap mask).
Episode episode_from_stub_json(std::string_view text);

void save_episodes(std::span<const Episode> episodes, const std::filesystem::path& path);
std::vector<Episode> load_episodes(const std::filesystem::path& path);

struct DatasetSplit {
    std::vector<Episode> train;
    std::vector<Episode> val;
    std::vector<Episode> test;
};

// Deterministic shuffled partition. Throws ValidationError for invalid ratios
// or fewer than three episodes.
DatasetSplit split_dataset(std::span<const Episode> episodes, std::array<double, 3> ratios, std::uint64_t seed);

}  // namespace avdn
