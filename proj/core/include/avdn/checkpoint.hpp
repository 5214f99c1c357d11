#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "avdn/agents.hpp"
#include "avdn/nn/tensor.hpp"

namespace avdn {

inline constexpr int kCheckpointSchemaVersion = 1;

// Named tensors of a policy plus training metadata. Tensor values are held at
// 32-bit float precision so an in-memory checkpoint and its file agree.
struct Checkpoint {
    ModelConfig config;
    std::int64_t iteration = 0;
    std::uint64_t seed = 0;
    std::optional<double> train_loss;
    std::optional<double> val_loss;
    std::vector<std::pair<std::string, nn::Tensor2>> tensors;

    const nn::Tensor2* find(const std::string& name) const;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Snapshot of a network's parameters, rounded to float.
Checkpoint make_checkpoint(PolicyNetwork& network, std::int64_t iteration, std::uint64_t seed);

// Rebuilds a network; throws FormatError on missing or misshaped tensors.
std::unique_ptr<PolicyNetwork> network_from_checkpoint(const Checkpoint& checkpoint);

// Text header then manifest (one "name rows cols" line per tensor), then the
// little-endian float32 payloads in manifest order.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source = "<memory>");

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// Throws FormatError naming the file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace avdn
