#include "avdn/nn/layers.hpp"

#include <cmath>
#include <numbers>

#include "avdn/errors.hpp"

namespace avdn::nn {

void Linear::init(Rng& rng, double stddev) {
    weight.value = random_normal(weight.value.rows(), weight.value.cols(), stddev, rng);
    bias.value.fill(0.0);
}

Tensor2 Linear::forward(const Tensor2& x) const { return add_row(matmul(x, weight.value), bias.value); }

Tensor2 Linear::backward(const Tensor2& x, const Tensor2& dy) {
    weight.grad += matmul_tn(x, dy);
    bias.grad += column_sums(dy);
    return matmul_nt(dy, weight.value);
}

void Linear::visit(const std::string& prefix, const ParameterVisitor& fn) {
    fn(prefix + ".weight", weight);
    fn(prefix + ".bias", bias);
}

LayerNorm::LayerNorm(std::size_t width) : gain(Tensor2(1, width, 1.0)), shift(1, width) {}

Tensor2 LayerNorm::forward(const Tensor2& x, LayerNormCache* cache) const {
    const std::size_t n = x.cols();
    if (gain.value.cols() != n) throw ShapeError("layer norm: width " + std::to_string(gain.value.cols()) +
                                                 " for input " + shape_string(x));
    Tensor2 normalized(x.rows(), n);
    std::vector<double> inv_std(x.rows());
    Tensor2 out(x.rows(), n);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto r = x.row(i);
        double mean = 0.0;
        for (double v : r) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : r) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) {
            normalized(i, j) = (r[j] - mean) * inv_std[i];
            out(i, j) = normalized(i, j) * gain.value(0, j) + shift.value(0, j);
        }
    }
    if (cache) {
        cache->normalized = std::move(normalized);
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

Tensor2 LayerNorm::backward(const LayerNormCache& cache, const Tensor2& dy) {
    const Tensor2& xhat = cache.normalized;
    const std::size_t n = dy.cols();
    const auto nd = static_cast<double>(n);
    Tensor2 dx(dy.rows(), n);
    for (std::size_t i = 0; i < dy.rows(); ++i) {
        double sum_g = 0.0;
        double sum_gx = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            gain.grad(0, j) += dy(i, j) * xhat(i, j);
            shift.grad(0, j) += dy(i, j);
            const double g = dy(i, j) * gain.value(0, j);
            sum_g += g;
            sum_gx += g * xhat(i, j);
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double g = dy(i, j) * gain.value(0, j);
            dx(i, j) = cache.inv_std[i] / nd * (nd * g - sum_g - xhat(i, j) * sum_gx);
        }
    }
    return dx;
}

void LayerNorm::visit(const std::string& prefix, const ParameterVisitor& fn) {
    fn(prefix + ".gain", gain);
    fn(prefix + ".shift", shift);
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Tensor2 gelu(const Tensor2& x) {
    Tensor2 out = x;
    for (double& v : out.data()) v = 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
    return out;
}

Tensor2 gelu_backward(const Tensor2& x, const Tensor2& dy) {
    Tensor2 dx(x.rows(), x.cols());
    const auto xs = x.data();
    const auto gs = dy.data();
    auto out = dx.data();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double v = xs[i];
        const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
        const double dt = (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
        out[i] = gs[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
    }
    return dx;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double bce_with_logits(double logit, double target) {
    return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

}  // namespace avdn::nn
