#pragma once

#include <cstdint>
#include <vector>

#include "avdn/nn/tensor.hpp"

namespace avdn::nn {

struct AdamWConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

struct AdamWState {
    Tensor2 m;
    Tensor2 v;
    std::int64_t t = 0;
    AdamWConfig config;

    AdamWState() = default;
    AdamWState(std::size_t rows, std::size_t cols, AdamWConfig cfg) : m(rows, cols), v(rows, cols), config(cfg) {}
};

struct AdamWResult {
    Tensor2 param;
    AdamWState state;
};

// Decoupled decay (param -= lr·wd·param) followed by the bias-corrected Adam
// update. Throws NumericError on a non-finite gradient, ShapeError on mismatch.
AdamWResult adamw_step(const Tensor2& param, const Tensor2& grad, const AdamWState& state);

// In-place form of adamw_step.
void adamw_update(Tensor2& param, const Tensor2& grad, AdamWState& state);

// One AdamW state per parameter, in registration order.
class AdamW {
public:
    AdamW(std::vector<Parameter*> params, AdamWConfig cfg);
    void step();
    void zero_grad();
    std::int64_t steps() const { return states_.empty() ? 0 : states_.front().t; }

private:
    std::vector<Parameter*> params_;
    std::vector<AdamWState> states_;
};

}  // namespace avdn::nn
