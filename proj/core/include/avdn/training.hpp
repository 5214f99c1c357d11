#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "avdn/agents.hpp"
#include "avdn/checkpoint.hpp"
#include "avdn/dataset.hpp"

namespace avdn {

struct LossWeights {
    double waypoint = 1.0;
    double stop = 0.5;
    double attention = 0.5;
};

struct TrainConfig {
    ModelConfig model;
    std::size_t batch_size = 4;
    double lr = 1e-5;
    double weight_decay = 0.01;
    std::int64_t total_iterations = 0;
    // Sorted, each ≤ total_iterations. Empty → one checkpoint at the end.
    std::vector<std::int64_t> checkpoint_iterations;
    LossWeights weights;
    AugmentConfig augment{0.2, 0.2, 0.05, 0.0, 0.0};
    std::uint64_t seed = 0;

    void validate() const;
};

// One teacher-forced decision point: the ground-truth prefix ending at step
// t, with rounds [0, t] revealed.
struct TrainingSample {
    AgentState state;
    Vec2 waypoint;  // body-frame delta to the next ground-truth view, meters
    double stop = 0.0;
    AttentionMask mask{4};
    double world_side = 1.0;
};

std::vector<TrainingSample> prepare_samples(std::span<const Episode> episodes, std::size_t obs_resolution = 16);

struct SampleLoss {
    double total = 0.0;
    double waypoint = 0.0;
    double stop = 0.0;
    double attention = 0.0;
};

// w₁·mean((Δ̂ − Δ)/W)² + w₂·BCE(stop) + w₃·mean BCE(attention). When `grads`
// is given it receives dLoss/dlogits.
SampleLoss sample_loss(const HeadLogits& logits, const TrainingSample& sample, const LossWeights& weights,
                       double step_max, HeadGrads* grads = nullptr);

// Mean loss over samples, forward only.
double dataset_loss(const PolicyNetwork& network, std::span<const TrainingSample> samples,
                    const LossWeights& weights);

// Mean loss over the batch; accumulates the gradient of that mean.
double batch_loss_and_grad(PolicyNetwork& network, std::span<const TrainingSample> batch, const LossWeights& weights);

struct TrainProgress {
    std::int64_t iteration = 0;
    double batch_loss = 0.0;
    const Checkpoint* checkpoint = nullptr;  // set when one was just emitted
};

using TrainCallback = std::function<void(const TrainProgress&)>;

// Throws NumericError naming the iteration on a non-finite loss.
std::vector<Checkpoint> train(ModelKind kind, std::span<const Episode> train_split, std::span<const Episode> val_split,
                              const TrainConfig& cfg, const TrainCallback& callback = {});

}  // namespace avdn
