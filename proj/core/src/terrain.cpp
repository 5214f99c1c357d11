#include <algorithm>
#include <cmath>

#include "avdn/dataset.hpp"
#include "avdn/errors.hpp"
#include "avdn/rng.hpp"

namespace avdn {

namespace {

double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
    const std::uint64_t key = Rng::mix64(static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ULL ^
                                         Rng::mix64(static_cast<std::uint64_t>(iy)));
    return static_cast<double>(Rng::mix64(seed ^ key) >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, double x, double y) {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const double tx = smoothstep(x - fx);
    const double ty = smoothstep(y - fy);
    const double v00 = lattice_value(seed, ix, iy);
    const double v10 = lattice_value(seed, ix + 1, iy);
    const double v01 = lattice_value(seed, ix, iy + 1);
    const double v11 = lattice_value(seed, ix + 1, iy + 1);
    const double bottom = v00 + tx * (v10 - v00);
    const double top = v01 + tx * (v11 - v01);
    return bottom + ty * (top - bottom);
}

}  // namespace

double terrain_value(std::uint64_t map_seed, Vec2 point) {
    // Three octaves; weights sum to 1 so the field stays in [0, 1].
    const double x = point.x / kTerrainCell;
    const double y = point.y / kTerrainCell;
    const double v = 0.5 * value_noise(map_seed, x, y) + 0.3 * value_noise(map_seed + 1, 2.0 * x, 2.0 * y) +
                     0.2 * value_noise(map_seed + 2, 4.0 * x, 4.0 * y);
    return std::clamp(v, 0.0, 1.0);
}

Observation rasterize_observation(std::uint64_t map_seed, double world_side, const ViewArea& view,
                                  std::size_t resolution) {
    if (resolution == 0) throw ValidationError("observation resolution must be positive");
    if (!view_inside_world(view, world_side)) throw ValidationError("rasterize: view lies outside the world square");
    Observation obs;
    obs.resolution = resolution;
    obs.direction = view.forward();
    obs.pixels.resize(resolution * resolution);
    const double side = view.side();
    const auto r = static_cast<double>(resolution);
    for (std::size_t row = 0; row < resolution; ++row) {
        const double forward = (0.5 - (static_cast<double>(row) + 0.5) / r) * side;
        for (std::size_t col = 0; col < resolution; ++col) {
            const double right = ((static_cast<double>(col) + 0.5) / r - 0.5) * side;
            obs.pixels[row * resolution + col] = terrain_value(map_seed, view.to_world({right, forward}));
        }
    }
    return obs;
}

AttentionMask goal_attention_mask(const ViewArea& view, const ViewArea& goal, std::size_t grid_size) {
    AttentionMask mask(grid_size);
    const Polygon goal_poly = view_polygon(goal);
    const double cell = view.side() / static_cast<double>(grid_size);
    const double half = 0.5 * view.side();
    for (std::size_t row = 0; row < grid_size; ++row) {
        const double v1 = half - static_cast<double>(row) * cell;
        const double v0 = v1 - cell;
        for (std::size_t col = 0; col < grid_size; ++col) {
            const double u0 = -half + static_cast<double>(col) * cell;
            const double u1 = u0 + cell;
            const Polygon cell_poly({view.to_world({u0, v0}), view.to_world({u1, v0}), view.to_world({u1, v1}),
                                    view.to_world({u0, v1})});
            mask.at(row, col) = intersection_area(cell_poly, goal_poly) > 1e-9 * cell * cell ? 1.0 : 0.0;
        }
    }
    return mask;
}

}  // namespace avdn
