#include "avdn/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "avdn/errors.hpp"

namespace avdn {

namespace {

// Exact for identical inputs; otherwise summed in ascending order.
double order_free_mean(std::vector<double> values) {
    if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
        return values.front();
    }
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double order_free_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum;
}

}  // namespace

AgentOutput fuse_outputs(std::span<const AgentOutput> outputs) {
    if (outputs.size() < 2) throw ValidationError("fuse_outputs needs at least 2 outputs");
    const std::size_t grid = outputs.front().attention.grid_size();
    for (std::size_t i = 1; i < outputs.size(); ++i) {
        if (outputs[i].attention.grid_size() != grid) {
            throw ShapeError("attention grid " + std::to_string(outputs[i].attention.grid_size()) + " of output " +
                             std::to_string(i) + " differs from " + std::to_string(grid));
        }
    }
    const auto collect = [&](auto&& get) {
        std::vector<double> v;
        v.reserve(outputs.size());
        for (const auto& o : outputs) v.push_back(get(o));
        return v;
    };

    AgentOutput fused;
    fused.next_center = Vec2{order_free_mean(collect([](const AgentOutput& o) { return o.next_center.x; })),
                             order_free_mean(collect([](const AgentOutput& o) { return o.next_center.y; }))};
    fused.stop_prob = order_free_mean(collect([](const AgentOutput& o) { return o.stop_prob; }));

    const auto rotations = collect([](const AgentOutput& o) { return o.next_rotation; });
    if (std::all_of(rotations.begin(), rotations.end(), [&](double r) { return r == rotations.front(); })) {
        fused.next_rotation = rotations.front();
    } else {
        const double c = order_free_sum(collect([](const AgentOutput& o) { return std::cos(o.next_rotation); }));
        const double s = order_free_sum(collect([](const AgentOutput& o) { return std::sin(o.next_rotation); }));
        fused.next_rotation = std::hypot(c, s) < 1e-12 ? outputs.front().next_rotation : normalize_angle(std::atan2(s, c));
    }

    std::vector<double> att(grid * grid);
    for (std::size_t k = 0; k < att.size(); ++k) {
        att[k] = order_free_mean(collect([k](const AgentOutput& o) { return o.attention.values()[k]; }));
    }
    fused.attention = AttentionMask(grid, std::move(att));
    return fused;
}

Ensemble::Ensemble(std::vector<Checkpoint> checkpoints, std::vector<std::string> sources) {
    if (checkpoints.size() < 2) throw ValidationError("an ensemble needs at least 2 members");
    if (!sources.empty() && sources.size() != checkpoints.size()) {
        throw ValidationError("ensemble sources and checkpoints differ in length");
    }
    const std::size_t grid = checkpoints.front().config.patch_grid;
    step_max_ = checkpoints.front().config.step_max;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const auto& ck = checkpoints[i];
        if (ck.config.patch_grid != grid) {
            throw ShapeError("ensemble member " + std::to_string(i) + " has attention grid " +
                             std::to_string(ck.config.patch_grid) + ", expected " + std::to_string(grid));
        }
        if (ck.config.obs_resolution != checkpoints.front().config.obs_resolution) {
            throw ShapeError("ensemble member " + std::to_string(i) + " expects a different observation resolution");
        }
        step_max_ = std::min(step_max_, ck.config.step_max);
        members_.push_back({ck.config.kind, sources.empty() ? "member " + std::to_string(i) : sources[i],
                            std::shared_ptr<const Policy>(make_policy(ck))});
    }
}

AgentOutput fused_policy(const Ensemble& ensemble, const AgentState& state) {
    std::vector<AgentOutput> outputs;
    outputs.reserve(ensemble.size());
    const auto members = ensemble.members();
    for (std::size_t i = 0; i < members.size(); ++i) {
        try {
            outputs.push_back(members[i].policy->decide(state));
        } catch (const std::exception& e) {
            throw std::runtime_error("ensemble member " + std::to_string(i) + " (" + members[i].source +
                                     "): " + e.what());
        }
    }
    return fuse_outputs(outputs);
}

std::vector<ManifestEntry> load_ensemble_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw FormatError("manifest " + manifest.string() + ": cannot open file");
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string kind;
        std::string path;
        if (!(fields >> kind)) continue;
        std::string extra;
        if (!(fields >> path) || (fields >> extra)) {
            throw FormatError("manifest " + manifest.string() + " line " + std::to_string(number) +
                              ": expected '<kind> <path>'");
        }
        ManifestEntry entry{ModelKind::transformer, path};
        try {
            entry.kind = model_kind_from_string(kind);
        } catch (const ValidationError& e) {
            throw FormatError("manifest " + manifest.string() + " line " + std::to_string(number) + ": " + e.what());
        }
        if (entry.path.is_relative()) entry.path = manifest.parent_path() / entry.path;
        out.push_back(std::move(entry));
    }
    return out;
}

Ensemble load_ensemble(std::span<const ManifestEntry> entries) {
    std::vector<Checkpoint> checkpoints;
    std::vector<std::string> sources;
    for (const auto& e : entries) {
        Checkpoint ck = load_checkpoint(e.path);
        if (ck.config.kind != e.kind) {
            throw ValidationError("checkpoint " + e.path.string() + " is " + to_string(ck.config.kind) +
                                  ", manifest says " + to_string(e.kind));
        }
        checkpoints.push_back(std::move(ck));
        sources.push_back(e.path.string());
    }
    return Ensemble(std::move(checkpoints), std::move(sources));
}

}  // namespace avdn
