#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "avdn/agents.hpp"
#include "avdn/checkpoint.hpp"

namespace avdn {

// Arithmetic mean of member outputs. Rotation is the circular mean; when the
// unit vectors cancel (exactly opposed) the first member's rotation is kept.
// Values are summed in sorted order, so the result does not depend on member
// order apart from that tie rule. Throws ValidationError for fewer than two
// outputs and ShapeError for mismatched attention grids.
AgentOutput fuse_outputs(std::span<const AgentOutput> outputs);

struct EnsembleMember {
    ModelKind kind;
    std::string source;
    std::shared_ptr<const Policy> policy;
};

class Ensemble {
public:
    // Throws ValidationError for fewer than two members, ShapeError when the
    // attention grids or observation resolutions differ.
    explicit Ensemble(std::vector<Checkpoint> checkpoints, std::vector<std::string> sources = {});

    std::span<const EnsembleMember> members() const { return members_; }
    std::size_t size() const { return members_.size(); }
    double step_max() const { return step_max_; }

private:
    std::vector<EnsembleMember> members_;
    double step_max_ = 0.0;
};

// Runs every member on the state and fuses; member errors are rethrown as
// std::runtime_error prefixed with the member index.
AgentOutput fused_policy(const Ensemble& ensemble, const AgentState& state);

class FusedPolicy : public Policy {
public:
    explicit FusedPolicy(std::shared_ptr<const Ensemble> ensemble) : ensemble_(std::move(ensemble)) {}
    AgentOutput decide(const AgentState& state) const override { return fused_policy(*ensemble_, state); }

private:
    std::shared_ptr<const Ensemble> ensemble_;
};

struct ManifestEntry {
    ModelKind kind;
    std::filesystem::path path;
};

// One "kind path" pair per line; blank lines and '#' comments are skipped,
// relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> load_ensemble_manifest(const std::filesystem::path& manifest);

// Loads each checkpoint and checks its header kind against the entry.
Ensemble load_ensemble(std::span<const ManifestEntry> entries);

}  // namespace avdn
