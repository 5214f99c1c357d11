#pragma once

#include <string>
#include <vector>

#include "avdn/nn/tensor.hpp"

namespace avdn::nn {

// Multi-head self-attention parameters. Each d_model×d_model projection is
// the column-wise concatenation of n_heads per-head d_model×head_dim blocks.
struct AttentionParams {
    std::size_t d_model = 0;
    std::size_t n_heads = 0;
    Parameter query;
    Parameter key;
    Parameter value;
    Parameter output;

    AttentionParams() = default;
    // Throws ShapeError unless n_heads > 0 divides d_model.
    AttentionParams(std::size_t d_model, std::size_t n_heads);

    std::size_t head_dim() const { return d_model / n_heads; }
    void init(Rng& rng, double stddev);
    void visit(const std::string& prefix, const ParameterVisitor& fn);
};

enum class AttentionMasking { none, causal };

struct AttentionCache {
    Tensor2 input;
    Tensor2 q, k, v;
    Tensor2 heads;                 // T×d_model concatenated head outputs
    std::vector<Tensor2> weights;  // per head, T×T
};

// Scaled dot-product multi-head attention, scale 1/sqrt(head_dim). Output is T×d_model.
Tensor2 self_attention(const Tensor2& seq, const AttentionParams& p, AttentionMasking mask = AttentionMasking::none,
                       AttentionCache* cache = nullptr);

// Accumulates parameter gradients; returns d(seq).
Tensor2 self_attention_backward(const AttentionCache& cache, AttentionParams& p, const Tensor2& dy);

}  // namespace avdn::nn
