#include "avdn/training.hpp"

#include <algorithm>
#include <cmath>

#include "avdn/errors.hpp"
#include "avdn/nn/layers.hpp"
#include "avdn/nn/optim.hpp"
#include "avdn/rng.hpp"

namespace avdn {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("lr must be finite and non-negative");
    if (total_iterations < 0) throw ValidationError("total_iterations must be >= 0");
    if (!std::is_sorted(checkpoint_iterations.begin(), checkpoint_iterations.end())) {
        throw ValidationError("checkpoint_iterations must be sorted ascending");
    }
    for (auto it : checkpoint_iterations) {
        if (it < 0 || it > total_iterations) {
            throw ValidationError("checkpoint iteration " + std::to_string(it) + " outside [0, " +
                                  std::to_string(total_iterations) + "]");
        }
    }
}

std::vector<TrainingSample> prepare_samples(std::span<const Episode> episodes, std::size_t obs_resolution) {
    std::vector<TrainingSample> out;
    for (const Episode& ep : episodes) {
        const auto views = ep.gt_trajectory.views();
        for (std::size_t t = 0; t < views.size(); ++t) {
            TrainingSample s;
            s.state = make_agent_state(ep, views.first(t + 1), t + 1, obs_resolution);
            const bool last = t + 1 == views.size();
            s.waypoint = last ? Vec2{} : views[t].to_local(views[t + 1].center());
            s.stop = last ? 1.0 : 0.0;
            s.mask = ep.gt_attention.at(t);
            s.world_side = ep.world_side;
            out.push_back(std::move(s));
        }
    }
    return out;
}

SampleLoss sample_loss(const HeadLogits& logits, const TrainingSample& sample, const LossWeights& weights,
                       double step_max, HeadGrads* grads) {
    const auto target = sample.mask.values();
    if (logits.attention.size() != target.size()) {
        throw ShapeError("attention head has " + std::to_string(logits.attention.size()) + " outputs, mask has " +
                         std::to_string(target.size()));
    }
    SampleLoss loss;
    const double w = sample.world_side;
    const double zs[2] = {logits.waypoint.x, logits.waypoint.y};
    const double ts[2] = {sample.waypoint.x, sample.waypoint.y};
    double dz[2] = {0.0, 0.0};
    for (int k = 0; k < 2; ++k) {
        const double th = std::tanh(zs[k]);
        const double e = (step_max * th - ts[k]) / w;
        loss.waypoint += 0.5 * e * e;
        dz[k] = weights.waypoint * e * step_max * (1.0 - th * th) / w;
    }
    loss.stop = nn::bce_with_logits(logits.stop, sample.stop);
    const double n = static_cast<double>(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) loss.attention += nn::bce_with_logits(logits.attention[i], target[i]);
    loss.attention /= n;
    loss.total = weights.waypoint * loss.waypoint + weights.stop * loss.stop + weights.attention * loss.attention;

    if (grads) {
        grads->waypoint = Vec2{dz[0], dz[1]};
        grads->stop = weights.stop * (nn::sigmoid(logits.stop) - sample.stop);
        grads->attention.resize(target.size());
        for (std::size_t i = 0; i < target.size(); ++i) {
            grads->attention[i] = weights.attention * (nn::sigmoid(logits.attention[i]) - target[i]) / n;
        }
    }
    return loss;
}

double dataset_loss(const PolicyNetwork& network, std::span<const TrainingSample> samples,
                    const LossWeights& weights) {
    if (samples.empty()) throw ValidationError("dataset_loss: no samples");
    double sum = 0.0;
    for (const auto& s : samples) {
        sum += sample_loss(network.forward(s.state), s, weights, network.config().step_max).total;
    }
    return sum / static_cast<double>(samples.size());
}

double batch_loss_and_grad(PolicyNetwork& network, std::span<const TrainingSample> batch, const LossWeights& weights) {
    if (batch.empty()) throw ValidationError("batch_loss_and_grad: empty batch");
    const double scale = 1.0 / static_cast<double>(batch.size());
    const double step_max = network.config().step_max;
    double sum = 0.0;
    for (const auto& s : batch) {
        network.forward_backward(s.state, [&](const HeadLogits& logits) {
            HeadGrads g;
            sum += sample_loss(logits, s, weights, step_max, &g).total;
            g.waypoint = scale * g.waypoint;
            g.stop *= scale;
            for (double& v : g.attention) v *= scale;
            return g;
        });
    }
    return sum * scale;
}

namespace {

TrainingSample augmented(const TrainingSample& s, const AugmentConfig& cfg, std::uint64_t seed) {
    TrainingSample out = s;
    auto& current = out.state.history.back();
    AugmentedSample a = augment(current.observation, s.mask, s.waypoint, cfg, seed);
    current.observation = std::move(a.observation);
    out.mask = std::move(a.mask);
    out.waypoint = a.waypoint;
    return out;
}

}  // namespace

std::vector<Checkpoint> train(ModelKind kind, std::span<const Episode> train_split, std::span<const Episode> val_split,
                              const TrainConfig& cfg, const TrainCallback& callback) {
    cfg.validate();
    if (train_split.empty()) throw ValidationError("train: empty training split");
    ModelConfig model = cfg.model;
    model.kind = kind;
    auto network = make_network(model, cfg.seed);

    const auto train_samples = prepare_samples(train_split, model.obs_resolution);
    const auto val_samples = prepare_samples(val_split, model.obs_resolution);
    for (const auto& s : train_samples) {
        if (s.mask.grid_size() != model.patch_grid) throw ShapeError("attention mask grid does not match patch_grid");
    }

    std::vector<std::int64_t> marks = cfg.checkpoint_iterations;
    if (marks.empty()) marks.push_back(cfg.total_iterations);
    std::size_t next_mark = 0;

    std::vector<Checkpoint> out;
    const auto emit = [&](std::int64_t iteration, double batch_loss) {
        while (next_mark < marks.size() && marks[next_mark] == iteration) {
            Checkpoint ck = make_checkpoint(*network, iteration, cfg.seed);
            ck.train_loss = dataset_loss(*network, train_samples, cfg.weights);
            if (!val_samples.empty()) ck.val_loss = dataset_loss(*network, val_samples, cfg.weights);
            out.push_back(std::move(ck));
            if (callback) callback({iteration, batch_loss, &out.back()});
            ++next_mark;
        }
    };
    emit(0, 0.0);

    nn::AdamWConfig opt_cfg;
    opt_cfg.lr = cfg.lr;
    opt_cfg.weight_decay = cfg.weight_decay;
    std::vector<nn::Parameter*> params;
    for (auto& [name, p] : network->parameters()) params.push_back(p);
    nn::AdamW optimizer(params, opt_cfg);

    Rng rng(Rng::mix64(cfg.seed ^ 0x747261696eULL));
    std::vector<TrainingSample> batch;
    batch.reserve(cfg.batch_size);
    for (std::int64_t it = 1; it <= cfg.total_iterations; ++it) {
        batch.clear();
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            const auto& s = train_samples[rng.index(train_samples.size())];
            batch.push_back(augmented(s, cfg.augment, rng.next_u64()));
        }
        optimizer.zero_grad();
        const double loss = batch_loss_and_grad(*network, batch, cfg.weights);
        if (!std::isfinite(loss)) throw NumericError("non-finite training loss at iteration " + std::to_string(it));
        optimizer.step();
        if (callback && (next_mark >= marks.size() || marks[next_mark] != it)) callback({it, loss, nullptr});
        emit(it, loss);
    }
    return out;
}

}  // namespace avdn
