#include "avdn/nn/lstm.hpp"

#include <cmath>

#include "avdn/errors.hpp"
#include "avdn/nn/layers.hpp"

namespace avdn::nn {

LstmParams::LstmParams(std::size_t in, std::size_t hidden)
    : input_size(in),
      hidden_size(hidden),
      input_weights(in, 4 * hidden),
      recurrent_weights(hidden, 4 * hidden),
      bias(1, 4 * hidden) {
    if (in == 0 || hidden == 0) throw ShapeError("lstm: sizes must be positive");
}

void LstmParams::init(Rng& rng, double stddev) {
    input_weights.value = random_normal(input_size, 4 * hidden_size, stddev, rng);
    recurrent_weights.value = random_normal(hidden_size, 4 * hidden_size, stddev, rng);
    bias.value.fill(0.0);
    // Forget-gate bias of 1 keeps early gradients flowing through the cell.
    for (std::size_t j = 0; j < hidden_size; ++j) bias.value(0, hidden_size + j) = 1.0;
}

void LstmParams::visit(const std::string& prefix, const ParameterVisitor& fn) {
    fn(prefix + ".input_weights", input_weights);
    fn(prefix + ".recurrent_weights", recurrent_weights);
    fn(prefix + ".bias", bias);
}

LstmState lstm_cell(const Tensor2& x, const Tensor2& h, const Tensor2& c, const LstmParams& p, LstmStepCache* cache) {
    const std::size_t hs = p.hidden_size;
    if (x.rows() != 1 || x.cols() != p.input_size) {
        throw ShapeError("lstm_cell: input " + shape_string(x) + ", expected 1x" + std::to_string(p.input_size));
    }
    if (h.rows() != 1 || h.cols() != hs || c.rows() != 1 || c.cols() != hs) {
        throw ShapeError("lstm_cell: state " + shape_string(h) + "/" + shape_string(c) + ", expected 1x" +
                         std::to_string(hs));
    }
    if (p.input_weights.value.rows() != p.input_size || p.input_weights.value.cols() != 4 * hs ||
        p.recurrent_weights.value.rows() != hs || p.recurrent_weights.value.cols() != 4 * hs ||
        p.bias.value.cols() != 4 * hs) {
        throw ShapeError("lstm_cell: inconsistent gate parameter shapes");
    }
    Tensor2 z = matmul(x, p.input_weights.value);
    z += matmul(h, p.recurrent_weights.value);
    z += p.bias.value;

    Tensor2 i(1, hs), f(1, hs), o(1, hs), g(1, hs), c_next(1, hs), tanh_c(1, hs), h_next(1, hs);
    for (std::size_t j = 0; j < hs; ++j) {
        i(0, j) = sigmoid(z(0, j));
        f(0, j) = sigmoid(z(0, hs + j));
        o(0, j) = sigmoid(z(0, 2 * hs + j));
        g(0, j) = std::tanh(z(0, 3 * hs + j));
        c_next(0, j) = f(0, j) * c(0, j) + i(0, j) * g(0, j);
        tanh_c(0, j) = std::tanh(c_next(0, j));
        h_next(0, j) = o(0, j) * tanh_c(0, j);
    }
    if (cache) {
        *cache = LstmStepCache{x, h, c, i, f, o, g, c_next, tanh_c};
    }
    return {std::move(h_next), std::move(c_next)};
}

LstmStepGrads lstm_cell_backward(const LstmStepCache& k, LstmParams& p, const Tensor2& dh, const Tensor2& dc) {
    const std::size_t hs = p.hidden_size;
    Tensor2 dz(1, 4 * hs);
    Tensor2 dc_prev(1, hs);
    for (std::size_t j = 0; j < hs; ++j) {
        const double o = k.output_gate(0, j);
        const double tc = k.tanh_c(0, j);
        const double dct = dc(0, j) + dh(0, j) * o * (1.0 - tc * tc);
        const double i = k.input_gate(0, j);
        const double f = k.forget_gate(0, j);
        const double g = k.candidate(0, j);
        dz(0, j) = dct * g * i * (1.0 - i);
        dz(0, hs + j) = dct * k.c_prev(0, j) * f * (1.0 - f);
        dz(0, 2 * hs + j) = dh(0, j) * tc * o * (1.0 - o);
        dz(0, 3 * hs + j) = dct * i * (1.0 - g * g);
        dc_prev(0, j) = dct * f;
    }
    p.input_weights.grad += matmul_tn(k.x, dz);
    p.recurrent_weights.grad += matmul_tn(k.h_prev, dz);
    p.bias.grad += dz;
    return {matmul_nt(dz, p.input_weights.value), matmul_nt(dz, p.recurrent_weights.value), std::move(dc_prev)};
}

}  // namespace avdn::nn
