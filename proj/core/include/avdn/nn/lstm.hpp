#pragma once

#include <string>

#include "avdn/nn/tensor.hpp"

namespace avdn::nn {

// Gate pre-activations are packed in column blocks of width hidden_size in
// the order input, forget, output, candidate.
struct LstmParams {
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;
    Parameter input_weights;      // input_size × 4H
    Parameter recurrent_weights;  // hidden_size × 4H
    Parameter bias;               // 1 × 4H

    LstmParams() = default;
    LstmParams(std::size_t input_size, std::size_t hidden_size);

    void init(Rng& rng, double stddev);
    void visit(const std::string& prefix, const ParameterVisitor& fn);
};

struct LstmStepCache {
    Tensor2 x, h_prev, c_prev;
    Tensor2 input_gate, forget_gate, output_gate, candidate;
    Tensor2 c, tanh_c;
};

struct LstmState {
    Tensor2 h;  // 1×H
    Tensor2 c;  // 1×H
};

// i,f,o = sigmoid; g = tanh; c' = f⊙c + i⊙g; h' = o⊙tanh(c').
// x is 1×input_size, h and c are 1×hidden_size. Throws ShapeError.
LstmState lstm_cell(const Tensor2& x, const Tensor2& h, const Tensor2& c, const LstmParams& p,
                     LstmStepCache* cache = nullptr);

struct LstmStepGrads {
    Tensor2 dx;
    Tensor2 dh_prev;
    Tensor2 dc_prev;
};

// Accumulates parameter gradients from dh', dc'.
LstmStepGrads lstm_cell_backward(const LstmStepCache& cache, LstmParams& p, const Tensor2& dh, const Tensor2& dc);

}  // namespace avdn::nn
