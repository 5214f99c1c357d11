#include "avdn/nn/optim.hpp"

#include <cmath>

#include "avdn/errors.hpp"

namespace avdn::nn {

void adamw_update(Tensor2& param, const Tensor2& grad, AdamWState& state) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols() || state.m.rows() != param.rows() ||
        state.m.cols() != param.cols() || state.v.rows() != param.rows() || state.v.cols() != param.cols()) {
        throw ShapeError("adamw: param " + shape_string(param) + ", grad " + shape_string(grad) + ", moments " +
                         shape_string(state.m));
    }
    if (!grad.all_finite()) throw NumericError("adamw: non-finite gradient");
    const AdamWConfig& c = state.config;
    state.t += 1;
    const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
    auto p = param.data();
    auto g = grad.data();
    auto m = state.m.data();
    auto v = state.v.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] -= c.lr * c.weight_decay * p[i];
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        p[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
}

AdamWResult adamw_step(const Tensor2& param, const Tensor2& grad, const AdamWState& state) {
    AdamWResult r{param, state};
    adamw_update(r.param, grad, r.state);
    return r;
}

AdamW::AdamW(std::vector<Parameter*> params, AdamWConfig cfg) : params_(std::move(params)) {
    states_.reserve(params_.size());
    for (Parameter* p : params_) states_.emplace_back(p->value.rows(), p->value.cols(), cfg);
}

void AdamW::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) adamw_update(params_[i]->value, params_[i]->grad, states_[i]);
}

void AdamW::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

}  // namespace avdn::nn
