#include <cmath>

#include "avdn/errors.hpp"
#include "avdn/models.hpp"
#include "avdn/rng.hpp"

namespace avdn {

using nn::Tensor2;

LstmNetwork::LstmNetwork(const ModelConfig& cfg)
    : token_embedding(cfg.vocab_size, cfg.lstm_input),
      step_projection(2 + cfg.patch_count(), cfg.lstm_input),
      cell(cfg.lstm_input, cfg.lstm_hidden),
      waypoint_head(cfg.lstm_hidden, 2),
      stop_head(cfg.lstm_hidden, 1),
      attention_head(cfg.lstm_hidden, cfg.patch_count()),
      cfg_(cfg) {
    cfg_.validate();
}

void LstmNetwork::init(std::uint64_t seed) {
    Rng rng(seed);
    const double h = static_cast<double>(cfg_.lstm_hidden);
    token_embedding.value = nn::random_normal(cfg_.vocab_size, cfg_.lstm_input, 0.1, rng);
    step_projection.init(rng, 1.0 / std::sqrt(static_cast<double>(2 + cfg_.patch_count())));
    cell.init(rng, 1.0 / std::sqrt(static_cast<double>(cfg_.lstm_input)));
    waypoint_head.init(rng, 1.0 / std::sqrt(h));
    stop_head.init(rng, 1.0 / std::sqrt(h));
    attention_head.init(rng, 1.0 / std::sqrt(h));
}

std::vector<double> LstmNetwork::step_features(const StepInput& step, std::size_t patch_grid) {
    std::vector<double> out{step.direction.x, step.direction.y};
    const auto pooled = pooled_patches(step.observation, patch_grid);
    out.insert(out.end(), pooled.begin(), pooled.end());
    return out;
}

namespace {

struct Unrolled {
    std::vector<nn::LstmStepCache> cells;
    std::vector<Tensor2> step_inputs;  // projection inputs, one per history step
    nn::LstmState final;
};

Tensor2 token_row(const nn::Parameter& table, int id) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.value.rows()) {
        throw ShapeError("token id " + std::to_string(id) + " outside vocabulary of " +
                         std::to_string(table.value.rows()));
    }
    Tensor2 x(1, table.value.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) x(0, j) = table.value(static_cast<std::size_t>(id), j);
    return x;
}

}  // namespace

// Tokens first, then one projected step vector per visited view.
static Unrolled unroll(const LstmNetwork& net, const AgentState& state, bool keep) {
    const auto& cfg = net.config();
    Unrolled u;
    nn::LstmState s{Tensor2(1, cfg.lstm_hidden), Tensor2(1, cfg.lstm_hidden)};
    const auto advance = [&](const Tensor2& x) {
        nn::LstmStepCache cache;
        s = nn::lstm_cell(x, s.h, s.c, net.cell, keep ? &cache : nullptr);
        if (keep) u.cells.push_back(std::move(cache));
    };
    for (int id : state.dialog_tokens.tokens) advance(token_row(net.token_embedding, id));
    for (const auto& step : state.history) {
        const auto f = LstmNetwork::step_features(step, cfg.patch_grid);
        Tensor2 in(1, f.size(), f);
        advance(net.step_projection.forward(in));
        if (keep) u.step_inputs.push_back(std::move(in));
    }
    u.final = std::move(s);
    return u;
}

namespace {

HeadLogits heads(const LstmNetwork& net, const Tensor2& h) {
    const Tensor2 wp = net.waypoint_head.forward(h);
    const Tensor2 at = net.attention_head.forward(h);
    HeadLogits out;
    out.waypoint = Vec2{wp(0, 0), wp(0, 1)};
    out.stop = net.stop_head.forward(h)(0, 0);
    out.attention.assign(at.data().begin(), at.data().end());
    return out;
}

}  // namespace

HeadLogits LstmNetwork::forward(const AgentState& state) const {
    state.validate();
    return heads(*this, unroll(*this, state, false).final.h);
}

HeadLogits LstmNetwork::forward_backward(const AgentState& state,
                                         const std::function<HeadGrads(const HeadLogits&)>& grad_fn) {
    state.validate();
    const Unrolled u = unroll(*this, state, true);
    const HeadLogits logits = heads(*this, u.final.h);
    const HeadGrads g = grad_fn(logits);
    if (g.attention.size() != cfg_.patch_count()) throw ShapeError("attention gradient has wrong length");

    const Tensor2& h = u.final.h;
    Tensor2 dh = waypoint_head.backward(h, Tensor2(1, 2, {g.waypoint.x, g.waypoint.y}));
    dh += stop_head.backward(h, Tensor2(1, 1, {g.stop}));
    dh += attention_head.backward(h, Tensor2(1, cfg_.patch_count(), g.attention));
    Tensor2 dc(1, cfg_.lstm_hidden);

    const std::size_t n_tokens = state.dialog_tokens.tokens.size();
    for (std::size_t t = u.cells.size(); t-- > 0;) {
        auto grads = nn::lstm_cell_backward(u.cells[t], cell, dh, dc);
        if (t >= n_tokens) {
            step_projection.backward(u.step_inputs[t - n_tokens], grads.dx);
        } else {
            const auto id = static_cast<std::size_t>(state.dialog_tokens.tokens[t]);
            for (std::size_t j = 0; j < cfg_.lstm_input; ++j) token_embedding.grad(id, j) += grads.dx(0, j);
        }
        dh = std::move(grads.dh_prev);
        dc = std::move(grads.dc_prev);
    }
    return logits;
}

void LstmNetwork::visit(const nn::ParameterVisitor& fn) {
    fn("embed.token", token_embedding);
    step_projection.visit("embed.step", fn);
    cell.visit("lstm", fn);
    waypoint_head.visit("head.waypoint", fn);
    stop_head.visit("head.stop", fn);
    attention_head.visit("head.attention", fn);
}

void LstmNetwork::zero_heads() {
    for (nn::Linear* head : {&waypoint_head, &stop_head, &attention_head}) {
        head->weight.value.fill(0.0);
        head->bias.value.fill(0.0);
    }
}

}  // namespace avdn
