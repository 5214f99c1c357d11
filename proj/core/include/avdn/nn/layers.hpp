#pragma once

#include <string>

#include "avdn/nn/tensor.hpp"

namespace avdn::nn {

// y = x·W + b with W in×out and b 1×out.
struct Linear {
    Parameter weight;
    Parameter bias;

    Linear() = default;
    Linear(std::size_t in, std::size_t out) : weight(in, out), bias(1, out) {}

    std::size_t in_features() const { return weight.value.rows(); }
    std::size_t out_features() const { return weight.value.cols(); }

    void init(Rng& rng, double stddev);
    Tensor2 forward(const Tensor2& x) const;
    // Accumulates dW, db; returns dx.
    Tensor2 backward(const Tensor2& x, const Tensor2& dy);
    void visit(const std::string& prefix, const ParameterVisitor& fn);
};

struct LayerNormCache {
    Tensor2 normalized;
    std::vector<double> inv_std;
};

// Row-wise layer normalization with learned gain and shift.
struct LayerNorm {
    Parameter gain;
    Parameter shift;
    double eps = 1e-5;

    LayerNorm() = default;
    explicit LayerNorm(std::size_t width);

    Tensor2 forward(const Tensor2& x, LayerNormCache* cache = nullptr) const;
    Tensor2 backward(const LayerNormCache& cache, const Tensor2& dy);
    void visit(const std::string& prefix, const ParameterVisitor& fn);
};

// tanh-approximated GELU; smooth everywhere, which keeps finite-difference
// checks free of kinks.
Tensor2 gelu(const Tensor2& x);
Tensor2 gelu_backward(const Tensor2& x, const Tensor2& dy);

double sigmoid(double z);

// Numerically stable binary cross-entropy on a logit; d/dz = sigmoid(z) - y.
double bce_with_logits(double logit, double target);

}  // namespace avdn::nn
