#include <cmath>

#include "avdn/errors.hpp"
#include "avdn/nn/attention.hpp"
#include "avdn/nn/grad_check.hpp"
#include "avdn/nn/layers.hpp"
#include "avdn/nn/lstm.hpp"
#include "avdn/nn/optim.hpp"
#include "avdn/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace avdn;
using namespace avdn::nn;

TEST_CASE("matmul variants agree") {
    Rng rng(1);
    const Tensor2 a = random_normal(3, 4, 1.0, rng);
    const Tensor2 b = random_normal(4, 5, 1.0, rng);
    const Tensor2 ab = matmul(a, b);
    const Tensor2 tn = matmul_tn(transpose(a), b);
    const Tensor2 nt = matmul_nt(a, transpose(b));
    for (std::size_t i = 0; i < ab.size(); ++i) {
        CHECK(tn.data()[i] == doctest::Approx(ab.data()[i]).epsilon(1e-12));
        CHECK(nt.data()[i] == doctest::Approx(ab.data()[i]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("softmax rows") {
    const Tensor2 u = softmax_rows(Tensor2::from_rows({{0, 0, 0}}));
    for (double v : u.data()) CHECK(v == doctest::Approx(1.0 / 3.0));
    const Tensor2 big = softmax_rows(Tensor2::from_rows({{1000, 0}}));
    CHECK(big(0, 0) == doctest::Approx(1.0));
    CHECK(big(0, 1) >= 0.0);
    CHECK(big(0, 1) < 1e-300);
    const Tensor2 logs = softmax_rows(Tensor2::from_rows({{std::log(1.0), std::log(2.0), std::log(3.0)}}));
    CHECK(std::abs(logs(0, 0) - 1.0 / 6) < 1e-15);
    CHECK(std::abs(logs(0, 1) - 2.0 / 6) < 1e-15);
    CHECK(std::abs(logs(0, 2) - 3.0 / 6) < 1e-15);

    Rng rng(2);
    Tensor2 x = random_normal(6, 7, 3.0, rng);
    const Tensor2 s = softmax_rows(x);
    Tensor2 shifted = x;
    for (std::size_t i = 0; i < shifted.rows(); ++i)
        for (double& v : shifted.row(i)) v += 4.5 * static_cast<double>(i);
    const Tensor2 s2 = softmax_rows(shifted);
    for (std::size_t i = 0; i < s.rows(); ++i) {
        double sum = 0.0;
        for (double v : s.row(i)) sum += v;
        CHECK(std::abs(sum - 1.0) < 1e-12);
        for (std::size_t j = 0; j < s.cols(); ++j) CHECK(std::abs(s(i, j) - s2(i, j)) < 1e-12);
    }
}

TEST_CASE("self_attention single token is a composition of linear maps") {
    Rng rng(3);
    AttentionParams p(4, 2);
    p.init(rng, 0.5);
    const Tensor2 x = random_normal(1, 4, 1.0, rng);
    const Tensor2 y = self_attention(x, p);
    const Tensor2 direct = matmul(matmul(x, p.value.value), p.output.value);
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(y(0, j) - direct(0, j)) < 1e-12);

    AttentionParams zero(4, 2);
    const Tensor2 silent = self_attention(random_normal(3, 4, 1.0, rng), zero);
    for (double v : silent.data()) CHECK(v == 0.0);
    CHECK_THROWS_AS(self_attention(random_normal(3, 5, 1.0, rng), p), ShapeError);
    CHECK_THROWS_AS(AttentionParams(6, 4), ShapeError);
}

TEST_CASE("self_attention matches the loop oracle") {
    Rng rng(4);
    AttentionParams p(6, 3);
    p.init(rng, 0.4);
    const Tensor2 x = random_normal(3, 6, 1.0, rng);
    const Tensor2 y = self_attention(x, p);
    const auto ref = oracle::loop_attention(oracle::to_matrix(x), oracle::to_matrix(p.query.value),
                                            oracle::to_matrix(p.key.value), oracle::to_matrix(p.value.value),
                                            oracle::to_matrix(p.output.value), 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(y(i, j) - ref[i][j]) < 1e-12);
}

TEST_CASE("causal mask: first row attends only to itself") {
    Rng rng(5);
    AttentionParams p(4, 1);
    p.init(rng, 0.5);
    Tensor2 x = random_normal(3, 4, 1.0, rng);
    AttentionCache cache;
    self_attention(x, p, AttentionMasking::causal, &cache);
    CHECK(cache.weights[0](0, 0) == 1.0);
    CHECK(cache.weights[0](0, 1) == 0.0);
    CHECK(cache.weights[0](1, 2) == 0.0);
}

TEST_CASE("lstm_cell examples") {
    LstmParams p(1, 1);
    const auto zero = lstm_cell(Tensor2(1, 1), Tensor2(1, 1), Tensor2(1, 1), p);
    CHECK(zero.h(0, 0) == 0.0);
    CHECK(zero.c(0, 0) == 0.0);

    LstmParams sat(2, 3);
    for (std::size_t j = 0; j < 3; ++j) sat.bias.value(0, 3 + j) = 100.0;  // forget gate
    const Tensor2 c = Tensor2::from_rows({{0.3, -0.7, 1.2}});
    const auto kept = lstm_cell(Tensor2(1, 2), Tensor2(1, 3), c, sat);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(kept.c(0, j) - c(0, j)) < 1e-6);

    // one unit, weights chosen by hand
    LstmParams one(1, 1);
    one.input_weights.value = Tensor2::from_rows({{0.5, -0.25, 1.0, 2.0}});
    one.recurrent_weights.value = Tensor2::from_rows({{0.1, 0.2, 0.3, 0.4}});
    one.bias.value = Tensor2::from_rows({{0.0, 1.0, -1.0, 0.5}});
    const double x = 0.8;
    const double h = -0.6;
    const double cp = 0.4;
    const auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double i = sig(0.5 * x + 0.1 * h);
    const double f = sig(-0.25 * x + 0.2 * h + 1.0);
    const double o = sig(1.0 * x + 0.3 * h - 1.0);
    const double g = std::tanh(2.0 * x + 0.4 * h + 0.5);
    const double c_next = f * cp + i * g;
    const auto got = lstm_cell(Tensor2(1, 1, {x}), Tensor2(1, 1, {h}), Tensor2(1, 1, {cp}), one);
    CHECK(std::abs(got.c(0, 0) - c_next) < 1e-15);
    CHECK(std::abs(got.h(0, 0) - o * std::tanh(c_next)) < 1e-15);

    CHECK_THROWS_AS(lstm_cell(Tensor2(1, 2), Tensor2(1, 1), Tensor2(1, 1), one), ShapeError);
}

TEST_CASE("adamw_step examples") {
    AdamWConfig cfg;
    cfg.lr = 0.01;
    cfg.weight_decay = 0.0;
    const Tensor2 one(1, 1, 1.0);
    const auto still = adamw_step(one, Tensor2(1, 1, 0.0), AdamWState(1, 1, cfg));
    CHECK(still.param(0, 0) == 1.0);
    CHECK(still.state.t == 1);

    const auto first = adamw_step(one, Tensor2(1, 1, 0.5), AdamWState(1, 1, cfg));
    CHECK(first.param(0, 0) == doctest::Approx(0.99).epsilon(1e-9));

    cfg.weight_decay = 0.1;
    const auto decay = adamw_step(one, Tensor2(1, 1, 0.0), AdamWState(1, 1, cfg));
    CHECK(decay.param(0, 0) == doctest::Approx(0.999).epsilon(1e-15));

    cfg.lr = 0.0;
    const auto frozen = adamw_step(Tensor2(1, 2, {0.3, -2.0}), Tensor2(1, 2, {5.0, -1.0}), AdamWState(1, 2, cfg));
    CHECK(frozen.param == Tensor2(1, 2, {0.3, -2.0}));

    CHECK_THROWS_AS(adamw_step(one, Tensor2(1, 1, NAN), AdamWState(1, 1, cfg)), NumericError);
    CHECK_THROWS_AS(adamw_step(one, Tensor2(1, 2), AdamWState(1, 1, cfg)), ShapeError);
}

TEST_CASE("grad_check on a quadratic") {
    Rng rng(6);
    Parameter x(random_normal(3, 2, 1.0, rng));
    x.grad = x.value;
    const auto loss = [&] {
        double s = 0.0;
        for (double v : x.value.data()) s += 0.5 * v * v;
        return s;
    };
    const std::vector<NamedParameter> params{{"x", &x}};
    CHECK(grad_check(loss, params) < 1e-8);
}

namespace {

double mse_half(const Tensor2& y, const Tensor2& target, Tensor2* dy) {
    double s = 0.0;
    if (dy) *dy = Tensor2(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y.data()[i] - target.data()[i];
        s += 0.5 * e * e;
        if (dy) dy->data()[i] = e;
    }
    return s;
}

}  // namespace

TEST_CASE("attention layer with an MSE head passes grad_check") {
    Rng rng(7);
    AttentionParams p(4, 2);
    p.init(rng, 0.5);
    Linear head(4, 2);
    head.init(rng, 0.5);
    const Tensor2 x = random_normal(3, 4, 1.0, rng);
    const Tensor2 target = random_normal(3, 2, 1.0, rng);

    AttentionCache cache;
    const Tensor2 a = self_attention(x, p, AttentionMasking::none, &cache);
    Tensor2 dy;
    mse_half(head.forward(a), target, &dy);
    self_attention_backward(cache, p, head.backward(a, dy));

    const auto loss = [&] { return mse_half(head.forward(self_attention(x, p)), target, nullptr); };
    const std::vector<NamedParameter> params{{"q", &p.query}, {"k", &p.key},     {"v", &p.value},
                                             {"o", &p.output}, {"w", &head.weight}, {"b", &head.bias}};
    CHECK(grad_check(loss, params) < 1e-4);
}

TEST_CASE("LSTM cell with an MSE head passes grad_check") {
    Rng rng(8);
    LstmParams p(3, 4);
    p.init(rng, 0.5);
    Linear head(4, 2);
    head.init(rng, 0.5);
    const Tensor2 x = random_normal(1, 3, 1.0, rng);
    const Tensor2 h = random_normal(1, 4, 0.5, rng);
    const Tensor2 c = random_normal(1, 4, 0.5, rng);
    const Tensor2 target = random_normal(1, 2, 1.0, rng);

    LstmStepCache cache;
    const auto s = lstm_cell(x, h, c, p, &cache);
    Tensor2 dy;
    mse_half(head.forward(s.h), target, &dy);
    lstm_cell_backward(cache, p, head.backward(s.h, dy), Tensor2(1, 4));

    const auto loss = [&] { return mse_half(head.forward(lstm_cell(x, h, c, p).h), target, nullptr); };
    const std::vector<NamedParameter> params{
        {"wx", &p.input_weights}, {"wh", &p.recurrent_weights}, {"b", &p.bias}, {"w", &head.weight}};
    CHECK(grad_check(loss, params) < 1e-4);
}

TEST_CASE("layer norm and gelu pass grad_check") {
    Rng rng(9);
    LayerNorm ln(5);
    ln.gain.value = random_normal(1, 5, 1.0, rng);
    ln.shift.value = random_normal(1, 5, 1.0, rng);
    Linear lin(5, 5);
    lin.init(rng, 0.5);
    const Tensor2 x = random_normal(2, 5, 1.0, rng);
    const Tensor2 target = random_normal(2, 5, 1.0, rng);

    const auto forward = [&](LayerNormCache* cache, Tensor2* pre) {
        const Tensor2 z = lin.forward(x);
        if (pre) *pre = z;
        return ln.forward(gelu(z), cache);
    };
    LayerNormCache cache;
    Tensor2 pre;
    const Tensor2 y = forward(&cache, &pre);
    Tensor2 dy;
    mse_half(y, target, &dy);
    lin.backward(x, gelu_backward(pre, ln.backward(cache, dy)));

    const auto loss = [&] { return mse_half(forward(nullptr, nullptr), target, nullptr); };
    const std::vector<NamedParameter> params{
        {"gain", &ln.gain}, {"shift", &ln.shift}, {"w", &lin.weight}, {"b", &lin.bias}};
    CHECK(grad_check(loss, params) < 1e-4);
}

TEST_CASE("bce_with_logits is stable") {
    CHECK(bce_with_logits(0.0, 1.0) == doctest::Approx(std::log(2.0)));
    CHECK(std::isfinite(bce_with_logits(800.0, 0.0)));
    CHECK(bce_with_logits(800.0, 0.0) == doctest::Approx(800.0));
    CHECK(sigmoid(-800.0) >= 0.0);
}
