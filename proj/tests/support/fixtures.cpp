#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>

namespace avdn::test {

ModelConfig tiny_config(ModelKind kind) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.n_layers = 1;
    cfg.d_ff = 12;
    cfg.lstm_input = 6;
    cfg.lstm_hidden = 5;
    cfg.patch_grid = 2;
    cfg.obs_resolution = 4;
    return cfg;
}

std::vector<Episode> tiny_episodes(std::uint64_t seed, std::size_t count) {
    GeneratorConfig g;
    g.patch_grid = tiny_config(ModelKind::lstm).patch_grid;
    return generate_episodes(seed, count, g);
}

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    for (;;) {
        path_ = base / ("avdn-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        if (std::filesystem::create_directory(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ViewArea square(double x, double y, double side, double rotation) { return ViewArea(Vec2{x, y}, side, rotation); }

Trajectory path_through(const std::vector<Vec2>& centers, double side) {
    std::vector<ViewArea> views;
    for (const auto& c : centers) views.emplace_back(c, side, 0.0);
    return Trajectory(std::move(views));
}

}  // namespace avdn::test
