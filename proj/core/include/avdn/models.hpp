#pragma once

#include <vector>

#include "avdn/agents.hpp"
#include "avdn/nn/attention.hpp"
#include "avdn/nn/layers.hpp"
#include "avdn/nn/lstm.hpp"

namespace avdn {

// Row-major (R/P)² pixel block of patch `index` (row-major over the P×P grid).
std::vector<double> patch_block(const Observation& obs, std::size_t patch_grid, std::size_t index);

// Mean of each patch block, P² values.
std::vector<double> pooled_patches(const Observation& obs, std::size_t patch_grid);

// Fixed sinusoidal position code for sequence row `position`.
double positional_encoding(std::size_t position, std::size_t dim, std::size_t d_model);

enum class Modality : std::size_t { language = 0, direction = 1, patch = 2 };

struct EmbeddingTable {
    nn::Parameter token;           // vocab × d
    nn::Parameter modality;        // 3 × d
    nn::Parameter patch_position;  // P² × d
    nn::Linear direction;          // 2 → d
    nn::Linear patch;              // (R/P)² → d

    EmbeddingTable() = default;
    EmbeddingTable(std::size_t vocab, std::size_t d_model, std::size_t patch_grid, std::size_t patch_pixels);
    void visit(const nn::ParameterVisitor& fn);
};

struct EmbedCache {
    std::vector<int> tokens;
    nn::Tensor2 direction_inputs;  // S × 2
    nn::Tensor2 patch_inputs;      // S·P² × (R/P)²
    std::size_t steps = 0;
};

// Sequence = token embeddings ++ per step [direction, P² patches], each row
// plus its modality embedding and sinusoidal position; patches also get a
// learned patch-position embedding. T = n_tokens + steps·(1 + P²).
nn::Tensor2 embed_inputs(const AgentState& state, const EmbeddingTable& table, std::size_t patch_grid,
                         EmbedCache* cache = nullptr);
void embed_inputs_backward(const EmbedCache& cache, EmbeddingTable& table, std::size_t patch_grid,
                           const nn::Tensor2& d_embedded);

// Post-norm encoder block: x = LN(x + MHA(x)); x = LN(x + FF(x)).
struct TransformerBlock {
    nn::AttentionParams attention;
    nn::LayerNorm norm1;
    nn::Linear ff_in;
    nn::Linear ff_out;
    nn::LayerNorm norm2;

    TransformerBlock() = default;
    TransformerBlock(std::size_t d_model, std::size_t n_heads, std::size_t d_ff);
    void visit(const std::string& prefix, const nn::ParameterVisitor& fn);
};

class TransformerNetwork final : public PolicyNetwork {
public:
    explicit TransformerNetwork(const ModelConfig& cfg);
    void init(std::uint64_t seed);

    const ModelConfig& config() const override { return cfg_; }
    HeadLogits forward(const AgentState& state) const override;
    HeadLogits forward_backward(const AgentState& state,
                                const std::function<HeadGrads(const HeadLogits&)>& grad_fn) override;
    void visit(const nn::ParameterVisitor& fn) override;
    void zero_heads() override;
    std::unique_ptr<PolicyNetwork> clone() const override { return std::make_unique<TransformerNetwork>(*this); }

    // Final-layer sequence before the heads; used by tests.
    nn::Tensor2 encode(const AgentState& state) const;

    EmbeddingTable embedding;
    std::vector<TransformerBlock> blocks;
    nn::Linear waypoint_head;   // d → 2
    nn::Linear stop_head;       // d → 1
    nn::Linear attention_head;  // d → 1, applied to each current patch row

private:
    ModelConfig cfg_;
};

class LstmNetwork final : public PolicyNetwork {
public:
    explicit LstmNetwork(const ModelConfig& cfg);
    void init(std::uint64_t seed);

    const ModelConfig& config() const override { return cfg_; }
    HeadLogits forward(const AgentState& state) const override;
    HeadLogits forward_backward(const AgentState& state,
                                const std::function<HeadGrads(const HeadLogits&)>& grad_fn) override;
    void visit(const nn::ParameterVisitor& fn) override;
    void zero_heads() override;
    std::unique_ptr<PolicyNetwork> clone() const override { return std::make_unique<LstmNetwork>(*this); }

    // Per-step input vector: (cos, sin, pooled patches).
    static std::vector<double> step_features(const StepInput& step, std::size_t patch_grid);

    nn::Parameter token_embedding;  // vocab × lstm_input
    nn::Linear step_projection;     // 2 + P² → lstm_input
    nn::LstmParams cell;
    nn::Linear waypoint_head;   // H → 2
    nn::Linear stop_head;       // H → 1
    nn::Linear attention_head;  // H → P²

private:
    ModelConfig cfg_;
};

}  // namespace avdn
