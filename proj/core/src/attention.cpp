#include "avdn/nn/attention.hpp"

#include <cmath>
#include <limits>

#include "avdn/errors.hpp"

namespace avdn::nn {

namespace {

Tensor2 head_slice(const Tensor2& x, std::size_t head, std::size_t dim) {
    Tensor2 out(x.rows(), dim);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < dim; ++j) out(i, j) = x(i, head * dim + j);
    return out;
}

void add_head_slice(Tensor2& x, const Tensor2& part, std::size_t head) {
    const std::size_t dim = part.cols();
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < dim; ++j) x(i, head * dim + j) += part(i, j);
}

}  // namespace

AttentionParams::AttentionParams(std::size_t d, std::size_t h)
    : d_model(d), n_heads(h), query(d, d), key(d, d), value(d, d), output(d, d) {
    if (h == 0 || d == 0 || d % h != 0) {
        throw ShapeError("attention: d_model " + std::to_string(d) + " not divisible by n_heads " + std::to_string(h));
    }
}

void AttentionParams::init(Rng& rng, double stddev) {
    query.value = random_normal(d_model, d_model, stddev, rng);
    key.value = random_normal(d_model, d_model, stddev, rng);
    value.value = random_normal(d_model, d_model, stddev, rng);
    output.value = random_normal(d_model, d_model, stddev, rng);
}

void AttentionParams::visit(const std::string& prefix, const ParameterVisitor& fn) {
    fn(prefix + ".query", query);
    fn(prefix + ".key", key);
    fn(prefix + ".value", value);
    fn(prefix + ".output", output);
}

Tensor2 self_attention(const Tensor2& seq, const AttentionParams& p, AttentionMasking mask, AttentionCache* cache) {
    if (seq.cols() != p.d_model) {
        throw ShapeError("self_attention: sequence width " + std::to_string(seq.cols()) + " != d_model " +
                         std::to_string(p.d_model));
    }
    if (p.query.value.rows() != p.d_model || p.query.value.cols() != p.d_model) {
        throw ShapeError("self_attention: projection shape " + shape_string(p.query.value));
    }
    const std::size_t t = seq.rows();
    const std::size_t dim = p.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));

    Tensor2 q = matmul(seq, p.query.value);
    Tensor2 k = matmul(seq, p.key.value);
    Tensor2 v = matmul(seq, p.value.value);
    Tensor2 heads(t, p.d_model);
    std::vector<Tensor2> weights;
    weights.reserve(p.n_heads);

    for (std::size_t h = 0; h < p.n_heads; ++h) {
        const Tensor2 qh = head_slice(q, h, dim);
        const Tensor2 kh = head_slice(k, h, dim);
        const Tensor2 vh = head_slice(v, h, dim);
        Tensor2 scores = matmul_nt(qh, kh);
        scores *= scale;
        if (mask == AttentionMasking::causal) {
            for (std::size_t i = 0; i < t; ++i)
                for (std::size_t j = i + 1; j < t; ++j) scores(i, j) = -std::numeric_limits<double>::infinity();
        }
        Tensor2 w = softmax_rows(scores);
        add_head_slice(heads, matmul(w, vh), h);
        weights.push_back(std::move(w));
    }

    Tensor2 out = matmul(heads, p.output.value);
    if (cache) {
        cache->input = seq;
        cache->q = std::move(q);
        cache->k = std::move(k);
        cache->v = std::move(v);
        cache->heads = std::move(heads);
        cache->weights = std::move(weights);
    }
    return out;
}

Tensor2 self_attention_backward(const AttentionCache& cache, AttentionParams& p, const Tensor2& dy) {
    const std::size_t t = cache.input.rows();
    const std::size_t dim = p.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));

    p.output.grad += matmul_tn(cache.heads, dy);
    const Tensor2 dheads = matmul_nt(dy, p.output.value);

    Tensor2 dq(t, p.d_model);
    Tensor2 dk(t, p.d_model);
    Tensor2 dv(t, p.d_model);
    for (std::size_t h = 0; h < p.n_heads; ++h) {
        const Tensor2& w = cache.weights[h];
        const Tensor2 qh = head_slice(cache.q, h, dim);
        const Tensor2 kh = head_slice(cache.k, h, dim);
        const Tensor2 vh = head_slice(cache.v, h, dim);
        const Tensor2 dout = head_slice(dheads, h, dim);

        const Tensor2 dw = matmul_nt(dout, vh);
        add_head_slice(dv, matmul_tn(w, dout), h);

        // Softmax Jacobian: ds = w ⊙ (dw − rowsum(dw ⊙ w)).
        Tensor2 ds(t, t);
        for (std::size_t i = 0; i < t; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < t; ++j) dot += dw(i, j) * w(i, j);
            for (std::size_t j = 0; j < t; ++j) ds(i, j) = w(i, j) * (dw(i, j) - dot) * scale;
        }
        add_head_slice(dq, matmul(ds, kh), h);
        add_head_slice(dk, matmul_tn(ds, qh), h);
    }

    p.query.grad += matmul_tn(cache.input, dq);
    p.key.grad += matmul_tn(cache.input, dk);
    p.value.grad += matmul_tn(cache.input, dv);

    Tensor2 dx = matmul_nt(dq, p.query.value);
    dx += matmul_nt(dk, p.key.value);
    dx += matmul_nt(dv, p.value.value);
    return dx;
}

}  // namespace avdn::nn
