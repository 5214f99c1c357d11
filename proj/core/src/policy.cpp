#include <algorithm>
#include <cmath>

#include "avdn/agents.hpp"
#include "avdn/checkpoint.hpp"
#include "avdn/errors.hpp"
#include "avdn/models.hpp"
#include "avdn/nn/layers.hpp"

namespace avdn {

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::transformer: return "transformer";
        case ModelKind::lstm: return "lstm";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& text) {
    if (text == "transformer") return ModelKind::transformer;
    if (text == "lstm") return ModelKind::lstm;
    throw ValidationError("unknown model kind '" + text + "' (expected transformer or lstm)");
}

void ModelConfig::validate() const {
    const auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw ValidationError(std::string(name) + " must be positive");
    };
    positive(d_model, "d_model");
    positive(n_heads, "n_heads");
    positive(d_ff, "d_ff");
    positive(lstm_input, "lstm_input");
    positive(lstm_hidden, "lstm_hidden");
    positive(patch_grid, "patch_grid");
    positive(obs_resolution, "obs_resolution");
    if (d_model % n_heads != 0) {
        throw ValidationError("d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                              std::to_string(n_heads));
    }
    if (obs_resolution % patch_grid != 0) {
        throw ValidationError("obs_resolution " + std::to_string(obs_resolution) + " not divisible by patch_grid " +
                              std::to_string(patch_grid));
    }
    if (vocab_size < 3) throw ValidationError("vocab_size must be at least 3");
    if (!(step_max > 0.0) || !std::isfinite(step_max)) throw ValidationError("step_max must be positive");
}

void AgentState::validate() const {
    if (history.empty()) throw ValidationError("agent state has no history");
    if (history.size() != step_index + 1) {
        throw ValidationError("history length " + std::to_string(history.size()) + " != step_index + 1");
    }
    const std::size_t res = history.front().observation.resolution;
    for (const auto& step : history) {
        if (std::abs(norm(step.direction) - 1.0) > 1e-9) throw ValidationError("direction is not unit-norm");
        if (step.observation.resolution != res || step.observation.pixels.size() != res * res) {
            throw ValidationError("inconsistent observation size in history");
        }
    }
    for (int t : dialog_tokens.tokens) {
        if (t < 0) throw ValidationError("negative token id");
    }
}

AgentState make_agent_state(const Episode& episode, std::span<const ViewArea> history_views,
                            std::size_t visible_rounds, std::size_t obs_resolution) {
    if (history_views.empty()) throw ValidationError("make_agent_state: empty history");
    AgentState state;
    const std::size_t rounds = std::min(visible_rounds, episode.dialog.size());
    state.dialog_tokens = tokenize_dialog(std::span(episode.dialog).first(rounds));
    state.history.reserve(history_views.size());
    for (const ViewArea& v : history_views) {
        state.history.push_back(
            {v.forward(), rasterize_observation(episode.map_seed, episode.world_side, v, obs_resolution)});
    }
    state.step_index = history_views.size() - 1;
    state.current_view = history_views.back();
    return state;
}

AgentOutput decode_head_logits(const HeadLogits& logits, const AgentState& state, double step_max) {
    const std::size_t n = logits.attention.size();
    const auto grid = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
    if (grid * grid != n || n == 0) throw ShapeError("attention logits are not a square grid");
    const ViewArea& view = state.current_view;
    const Vec2 body{step_max * std::tanh(logits.waypoint.x), step_max * std::tanh(logits.waypoint.y)};
    const Vec2 delta = body.x * view.right() + body.y * view.forward();

    AgentOutput out;
    out.next_center = view.center() + delta;
    out.next_rotation = norm(delta) > 0.0 ? normalize_angle(heading(delta)) : view.rotation();
    out.stop_prob = nn::sigmoid(logits.stop);
    std::vector<double> att(n);
    std::transform(logits.attention.begin(), logits.attention.end(), att.begin(), nn::sigmoid);
    out.attention = AttentionMask(grid, std::move(att));
    return out;
}

std::vector<std::pair<std::string, nn::Parameter*>> PolicyNetwork::parameters() {
    std::vector<std::pair<std::string, nn::Parameter*>> out;
    visit([&](const std::string& name, nn::Parameter& p) { out.emplace_back(name, &p); });
    return out;
}

void PolicyNetwork::zero_grad() {
    visit([](const std::string&, nn::Parameter& p) { p.zero_grad(); });
}

std::unique_ptr<PolicyNetwork> make_network(const ModelConfig& cfg, std::uint64_t seed) {
    ModelConfig c = cfg;
    if (c.vocab_size == 0) c.vocab_size = default_vocabulary().size();
    c.validate();
    if (c.kind == ModelKind::transformer) {
        auto net = std::make_unique<TransformerNetwork>(c);
        net->init(seed);
        return net;
    }
    auto net = std::make_unique<LstmNetwork>(c);
    net->init(seed);
    return net;
}

AgentOutput NetworkPolicy::decide(const AgentState& state) const {
    return decode_head_logits(network_->forward(state), state, network_->config().step_max);
}

std::unique_ptr<Policy> make_policy(const Checkpoint& checkpoint) {
    return std::make_unique<NetworkPolicy>(network_from_checkpoint(checkpoint));
}

namespace {

AgentOutput run_kind(const AgentState& state, const Checkpoint& checkpoint, ModelKind expected) {
    if (checkpoint.config.kind != expected) {
        throw ValidationError(std::string("checkpoint kind is ") + to_string(checkpoint.config.kind) + ", expected " +
                              to_string(expected));
    }
    return NetworkPolicy(network_from_checkpoint(checkpoint)).decide(state);
}

}  // namespace

AgentOutput transformer_policy(const AgentState& state, const Checkpoint& checkpoint) {
    return run_kind(state, checkpoint, ModelKind::transformer);
}

AgentOutput lstm_policy(const AgentState& state, const Checkpoint& checkpoint) {
    return run_kind(state, checkpoint, ModelKind::lstm);
}

AgentOutput oracle_policy(const AgentState& state, const ViewArea& goal, double step_max, double iou_threshold,
                          std::size_t grid_size) {
    const ViewArea& view = state.current_view;
    Vec2 delta = goal.center() - view.center();
    const double dist = norm(delta);
    if (dist > step_max) delta = (step_max / dist) * delta;

    AgentOutput out;
    out.next_center = view.center() + delta;
    out.next_rotation = norm(delta) > 0.0 ? normalize_angle(heading(delta)) : view.rotation();
    out.stop_prob = iou(view, goal) >= iou_threshold ? 1.0 : 0.0;
    out.attention = goal_attention_mask(view, goal, grid_size);
    return out;
}

}  // namespace avdn
