#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "avdn/agents.hpp"
#include "avdn/dataset.hpp"

namespace avdn::test {

// Small network sizes that keep finite differences fast.
ModelConfig tiny_config(ModelKind kind);

// Episodes whose attention masks match tiny_config's patch grid.
std::vector<Episode> tiny_episodes(std::uint64_t seed, std::size_t count);

// Creates a unique directory under the system temp dir; removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

ViewArea square(double x, double y, double side = 1.0, double rotation = 0.0);

Trajectory path_through(const std::vector<Vec2>& centers, double side = 1.0);

}  // namespace avdn::test
