#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "avdn/dataset.hpp"
#include "avdn/nn/tensor.hpp"
#include "avdn/vocabulary.hpp"

namespace avdn {

enum class ModelKind { transformer, lstm };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& text);

// Architecture sizes. The defaults are desk-scale choices.
struct ModelConfig {
    ModelKind kind = ModelKind::transformer;
    std::size_t d_model = 32;
    std::size_t n_heads = 4;
    std::size_t n_layers = 2;
    std::size_t d_ff = 64;
    std::size_t lstm_input = 32;
    std::size_t lstm_hidden = 32;
    std::size_t vocab_size = 0;  // 0 → default_vocabulary().size()
    std::size_t patch_grid = 4;
    std::size_t obs_resolution = 16;
    double step_max = 30.0;

    std::size_t patch_pixels() const {
        const std::size_t block = obs_resolution / patch_grid;
        return block * block;
    }
    std::size_t patch_count() const { return patch_grid * patch_grid; }
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct StepInput {
    Vec2 direction;  // unit (cos yaw, sin yaw)
    Observation observation;
};

// Everything a policy may see at one decision point.
struct AgentState {
    TokenSequence dialog_tokens;
    std::vector<StepInput> history;  // one entry per visited view, current last
    std::size_t step_index = 0;      // history.size() - 1
    ViewArea current_view{Vec2{}, 1.0, 0.0};

    // Throws ValidationError on broken invariants.
    void validate() const;
};

// Builds the state for `view` after `history_views` (which end at `view`),
// with dialog rounds [0, visible_rounds) revealed.
AgentState make_agent_state(const Episode& episode, std::span<const ViewArea> history_views,
                            std::size_t visible_rounds, std::size_t obs_resolution = 16);

struct AgentOutput {
    Vec2 next_center;
    double next_rotation = 0.0;
    double stop_prob = 0.0;
    AttentionMask attention{4};

    friend bool operator==(const AgentOutput&, const AgentOutput&) = default;
};

// Raw network outputs before squashing.
struct HeadLogits {
    Vec2 waypoint;  // pre-tanh body-frame (right, forward)
    double stop = 0.0;
    std::vector<double> attention;
};

// dLoss/dlogits with the same layout.
using HeadGrads = HeadLogits;

// Waypoint delta = step_max · tanh(logits) in the body frame of the current
// view; rotation faces the delta (unchanged for a zero delta).
AgentOutput decode_head_logits(const HeadLogits& logits, const AgentState& state, double step_max);

// Common interface of the trainable policy networks.
class PolicyNetwork {
public:
    virtual ~PolicyNetwork() = default;

    virtual const ModelConfig& config() const = 0;
    virtual HeadLogits forward(const AgentState& state) const = 0;
    // Forward pass, then backward from grad_fn(logits); gradients accumulate
    // into the parameters.
    virtual HeadLogits forward_backward(const AgentState& state,
                                        const std::function<HeadGrads(const HeadLogits&)>& grad_fn) = 0;
    virtual void visit(const nn::ParameterVisitor& fn) = 0;
    // Zeroes the three output heads.
    virtual void zero_heads() = 0;
    virtual std::unique_ptr<PolicyNetwork> clone() const = 0;

    std::vector<std::pair<std::string, nn::Parameter*>> parameters();
    void zero_grad();
};

std::unique_ptr<PolicyNetwork> make_network(const ModelConfig& cfg, std::uint64_t seed);

// Anything that maps a state to a decision. Implementations are immutable
// after construction and safe to share across threads.
class Policy {
public:
    virtual ~Policy() = default;
    virtual AgentOutput decide(const AgentState& state) const = 0;
};

struct Checkpoint;

class NetworkPolicy : public Policy {
public:
    explicit NetworkPolicy(std::unique_ptr<PolicyNetwork> network) : network_(std::move(network)) {}
    AgentOutput decide(const AgentState& state) const override;
    const PolicyNetwork& network() const { return *network_; }

private:
    std::unique_ptr<PolicyNetwork> network_;
};

// Either kind, dispatched on the checkpoint header.
std::unique_ptr<Policy> make_policy(const Checkpoint& checkpoint);

// Throw ValidationError on a kind mismatch.
AgentOutput transformer_policy(const AgentState& state, const Checkpoint& checkpoint);
AgentOutput lstm_policy(const AgentState& state, const Checkpoint& checkpoint);

// Goal-aware scripted policy: straight clipped steps, stops once the current
// view meets the IoU threshold, attention is the exact goal-overlap mask.
AgentOutput oracle_policy(const AgentState& state, const ViewArea& goal, double step_max,
                          double iou_threshold = 0.4, std::size_t grid_size = 4);

class OraclePolicy : public Policy {
public:
    OraclePolicy(ViewArea goal, double step_max, double iou_threshold = 0.4, std::size_t grid_size = 4)
        : goal_(goal), step_max_(step_max), iou_threshold_(iou_threshold), grid_size_(grid_size) {}
    AgentOutput decide(const AgentState& state) const override {
        return oracle_policy(state, goal_, step_max_, iou_threshold_, grid_size_);
    }

private:
    ViewArea goal_;
    double step_max_;
    double iou_threshold_;
    std::size_t grid_size_;
};

}  // namespace avdn
