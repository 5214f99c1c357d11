#include <cmath>

#include "avdn/errors.hpp"
#include "avdn/models.hpp"
#include "avdn/rng.hpp"

namespace avdn {

using nn::Tensor2;

std::vector<double> patch_block(const Observation& obs, std::size_t patch_grid, std::size_t index) {
    if (patch_grid == 0 || obs.resolution % patch_grid != 0) {
        throw ShapeError("observation resolution " + std::to_string(obs.resolution) + " not divisible by patch grid " +
                         std::to_string(patch_grid));
    }
    if (index >= patch_grid * patch_grid) throw ShapeError("patch index out of range");
    const std::size_t block = obs.resolution / patch_grid;
    const std::size_t r0 = (index / patch_grid) * block;
    const std::size_t c0 = (index % patch_grid) * block;
    std::vector<double> out;
    out.reserve(block * block);
    for (std::size_t r = 0; r < block; ++r) {
        for (std::size_t c = 0; c < block; ++c) out.push_back(obs.pixel(r0 + r, c0 + c));
    }
    return out;
}

std::vector<double> pooled_patches(const Observation& obs, std::size_t patch_grid) {
    std::vector<double> out;
    out.reserve(patch_grid * patch_grid);
    for (std::size_t p = 0; p < patch_grid * patch_grid; ++p) {
        const auto block = patch_block(obs, patch_grid, p);
        double sum = 0.0;
        for (double v : block) sum += v;
        out.push_back(sum / static_cast<double>(block.size()));
    }
    return out;
}

double positional_encoding(std::size_t position, std::size_t dim, std::size_t d_model) {
    const double pair = static_cast<double>(dim / 2 * 2);
    const double angle = static_cast<double>(position) / std::pow(10000.0, pair / static_cast<double>(d_model));
    return dim % 2 == 0 ? std::sin(angle) : std::cos(angle);
}

EmbeddingTable::EmbeddingTable(std::size_t vocab, std::size_t d_model, std::size_t patch_grid,
                               std::size_t patch_pixels)
    : token(vocab, d_model),
      modality(3, d_model),
      patch_position(patch_grid * patch_grid, d_model),
      direction(2, d_model),
      patch(patch_pixels, d_model) {}

void EmbeddingTable::visit(const nn::ParameterVisitor& fn) {
    fn("embed.token", token);
    fn("embed.modality", modality);
    fn("embed.patch_position", patch_position);
    direction.visit("embed.direction", fn);
    patch.visit("embed.patch", fn);
}

Tensor2 embed_inputs(const AgentState& state, const EmbeddingTable& table, std::size_t patch_grid, EmbedCache* cache) {
    const std::size_t d = table.token.value.cols();
    const std::size_t vocab = table.token.value.rows();
    const std::size_t n_patch = patch_grid * patch_grid;
    const std::size_t pixels = table.patch.in_features();
    const auto& tokens = state.dialog_tokens.tokens;
    const std::size_t steps = state.history.size();
    const std::size_t total = tokens.size() + steps * (1 + n_patch);

    Tensor2 dir_in(steps, 2);
    Tensor2 patch_in(steps * n_patch, pixels);
    for (std::size_t s = 0; s < steps; ++s) {
        const auto& step = state.history[s];
        dir_in(s, 0) = step.direction.x;
        dir_in(s, 1) = step.direction.y;
        for (std::size_t p = 0; p < n_patch; ++p) {
            const auto block = patch_block(step.observation, patch_grid, p);
            if (block.size() != pixels) {
                throw ShapeError("patch has " + std::to_string(block.size()) + " pixels, model expects " +
                                 std::to_string(pixels));
            }
            for (std::size_t k = 0; k < pixels; ++k) patch_in(s * n_patch + p, k) = block[k];
        }
    }
    const Tensor2 dir_emb = table.direction.forward(dir_in);
    const Tensor2 patch_emb = table.patch.forward(patch_in);

    Tensor2 out(total, d);
    const auto add_common = [&](std::size_t row, Modality m) {
        for (std::size_t j = 0; j < d; ++j) {
            out(row, j) += table.modality.value(static_cast<std::size_t>(m), j) + positional_encoding(row, j, d);
        }
    };
    std::size_t row = 0;
    for (int id : tokens) {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
            throw ShapeError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(vocab));
        }
        for (std::size_t j = 0; j < d; ++j) out(row, j) = table.token.value(static_cast<std::size_t>(id), j);
        add_common(row++, Modality::language);
    }
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t j = 0; j < d; ++j) out(row, j) = dir_emb(s, j);
        add_common(row++, Modality::direction);
        for (std::size_t p = 0; p < n_patch; ++p) {
            for (std::size_t j = 0; j < d; ++j) {
                out(row, j) = patch_emb(s * n_patch + p, j) + table.patch_position.value(p, j);
            }
            add_common(row++, Modality::patch);
        }
    }
    if (cache) {
        cache->tokens = tokens;
        cache->direction_inputs = std::move(dir_in);
        cache->patch_inputs = std::move(patch_in);
        cache->steps = steps;
    }
    return out;
}

void embed_inputs_backward(const EmbedCache& cache, EmbeddingTable& table, std::size_t patch_grid,
                           const Tensor2& d_embedded) {
    const std::size_t d = table.token.value.cols();
    const std::size_t n_patch = patch_grid * patch_grid;
    Tensor2 d_dir(cache.steps, d);
    Tensor2 d_patch(cache.steps * n_patch, d);
    const auto add_to = [&](Tensor2& target, std::size_t target_row, std::size_t row) {
        for (std::size_t j = 0; j < d; ++j) target(target_row, j) += d_embedded(row, j);
    };
    std::size_t row = 0;
    for (int id : cache.tokens) {
        add_to(table.token.grad, static_cast<std::size_t>(id), row);
        add_to(table.modality.grad, static_cast<std::size_t>(Modality::language), row);
        ++row;
    }
    for (std::size_t s = 0; s < cache.steps; ++s) {
        add_to(d_dir, s, row);
        add_to(table.modality.grad, static_cast<std::size_t>(Modality::direction), row);
        ++row;
        for (std::size_t p = 0; p < n_patch; ++p) {
            add_to(d_patch, s * n_patch + p, row);
            add_to(table.patch_position.grad, p, row);
            add_to(table.modality.grad, static_cast<std::size_t>(Modality::patch), row);
            ++row;
        }
    }
    table.direction.backward(cache.direction_inputs, d_dir);
    table.patch.backward(cache.patch_inputs, d_patch);
}

TransformerBlock::TransformerBlock(std::size_t d_model, std::size_t n_heads, std::size_t d_ff)
    : attention(d_model, n_heads), norm1(d_model), ff_in(d_model, d_ff), ff_out(d_ff, d_model), norm2(d_model) {}

void TransformerBlock::visit(const std::string& prefix, const nn::ParameterVisitor& fn) {
    attention.visit(prefix + ".attn", fn);
    norm1.visit(prefix + ".norm1", fn);
    ff_in.visit(prefix + ".ff_in", fn);
    ff_out.visit(prefix + ".ff_out", fn);
    norm2.visit(prefix + ".norm2", fn);
}

namespace {

struct BlockCache {
    nn::AttentionCache attention;
    nn::LayerNormCache norm1;
    Tensor2 mid;  // output of norm1
    Tensor2 ff_pre;
    Tensor2 ff_act;
    nn::LayerNormCache norm2;
};

Tensor2 block_forward(const TransformerBlock& b, const Tensor2& x, BlockCache* cache) {
    Tensor2 attn = nn::self_attention(x, b.attention, nn::AttentionMasking::none, cache ? &cache->attention : nullptr);
    Tensor2 mid = b.norm1.forward(x + attn, cache ? &cache->norm1 : nullptr);
    Tensor2 pre = b.ff_in.forward(mid);
    Tensor2 act = nn::gelu(pre);
    Tensor2 out = b.norm2.forward(mid + b.ff_out.forward(act), cache ? &cache->norm2 : nullptr);
    if (cache) {
        cache->mid = std::move(mid);
        cache->ff_pre = std::move(pre);
        cache->ff_act = std::move(act);
    }
    return out;
}

Tensor2 block_backward(TransformerBlock& b, const BlockCache& cache, const Tensor2& dy) {
    const Tensor2 d_sum2 = b.norm2.backward(cache.norm2, dy);
    const Tensor2 d_act = b.ff_out.backward(cache.ff_act, d_sum2);
    const Tensor2 d_pre = nn::gelu_backward(cache.ff_pre, d_act);
    const Tensor2 d_mid = d_sum2 + b.ff_in.backward(cache.mid, d_pre);
    const Tensor2 d_sum1 = b.norm1.backward(cache.norm1, d_mid);
    return d_sum1 + nn::self_attention_backward(cache.attention, b.attention, d_sum1);
}

Tensor2 row_of(const Tensor2& x, std::size_t row) {
    Tensor2 out(1, x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) out(0, j) = x(row, j);
    return out;
}

Tensor2 rows_of(const Tensor2& x, std::size_t first, std::size_t count) {
    Tensor2 out(count, x.cols());
    for (std::size_t r = 0; r < count; ++r) {
        for (std::size_t j = 0; j < x.cols(); ++j) out(r, j) = x(first + r, j);
    }
    return out;
}

}  // namespace

TransformerNetwork::TransformerNetwork(const ModelConfig& cfg)
    : embedding(cfg.vocab_size, cfg.d_model, cfg.patch_grid, cfg.patch_pixels()),
      waypoint_head(cfg.d_model, 2),
      stop_head(cfg.d_model, 1),
      attention_head(cfg.d_model, 1),
      cfg_(cfg) {
    cfg_.validate();
    for (std::size_t i = 0; i < cfg.n_layers; ++i) blocks.emplace_back(cfg.d_model, cfg.n_heads, cfg.d_ff);
}

void TransformerNetwork::init(std::uint64_t seed) {
    Rng rng(seed);
    const double d = static_cast<double>(cfg_.d_model);
    embedding.token.value = nn::random_normal(cfg_.vocab_size, cfg_.d_model, 0.1, rng);
    embedding.modality.value = nn::random_normal(3, cfg_.d_model, 0.1, rng);
    embedding.patch_position.value = nn::random_normal(cfg_.patch_count(), cfg_.d_model, 0.1, rng);
    embedding.direction.init(rng, 1.0 / std::sqrt(2.0));
    embedding.patch.init(rng, 1.0 / std::sqrt(static_cast<double>(cfg_.patch_pixels())));
    for (auto& b : blocks) {
        b.attention.init(rng, 1.0 / std::sqrt(d));
        b.ff_in.init(rng, 1.0 / std::sqrt(d));
        b.ff_out.init(rng, 1.0 / std::sqrt(static_cast<double>(cfg_.d_ff)));
    }
    waypoint_head.init(rng, 1.0 / std::sqrt(d));
    stop_head.init(rng, 1.0 / std::sqrt(d));
    attention_head.init(rng, 1.0 / std::sqrt(d));
}

Tensor2 TransformerNetwork::encode(const AgentState& state) const {
    state.validate();
    Tensor2 x = embed_inputs(state, embedding, cfg_.patch_grid);
    for (const auto& b : blocks) x = block_forward(b, x, nullptr);
    return x;
}

namespace {

HeadLogits read_heads(const Tensor2& encoded, std::size_t dir_row, std::size_t n_patch, const nn::Linear& waypoint,
                      const nn::Linear& stop, const nn::Linear& attention) {
    const Tensor2 dir = row_of(encoded, dir_row);
    const Tensor2 wp = waypoint.forward(dir);
    const Tensor2 st = stop.forward(dir);
    const Tensor2 at = attention.forward(rows_of(encoded, dir_row + 1, n_patch));
    HeadLogits out;
    out.waypoint = Vec2{wp(0, 0), wp(0, 1)};
    out.stop = st(0, 0);
    out.attention.assign(at.data().begin(), at.data().end());
    return out;
}

}  // namespace

HeadLogits TransformerNetwork::forward(const AgentState& state) const {
    const Tensor2 x = encode(state);
    const std::size_t n_patch = cfg_.patch_count();
    const std::size_t dir_row = x.rows() - 1 - n_patch;
    return read_heads(x, dir_row, n_patch, waypoint_head, stop_head, attention_head);
}

HeadLogits TransformerNetwork::forward_backward(const AgentState& state,
                                                const std::function<HeadGrads(const HeadLogits&)>& grad_fn) {
    state.validate();
    EmbedCache embed_cache;
    std::vector<BlockCache> caches(blocks.size());
    Tensor2 x = embed_inputs(state, embedding, cfg_.patch_grid, &embed_cache);
    for (std::size_t i = 0; i < blocks.size(); ++i) x = block_forward(blocks[i], x, &caches[i]);

    const std::size_t n_patch = cfg_.patch_count();
    const std::size_t dir_row = x.rows() - 1 - n_patch;
    const HeadLogits logits = read_heads(x, dir_row, n_patch, waypoint_head, stop_head, attention_head);
    const HeadGrads g = grad_fn(logits);
    if (g.attention.size() != n_patch) throw ShapeError("attention gradient has wrong length");

    Tensor2 dx(x.rows(), x.cols());
    const Tensor2 dir = row_of(x, dir_row);
    const Tensor2 d_dir_wp = waypoint_head.backward(dir, Tensor2(1, 2, {g.waypoint.x, g.waypoint.y}));
    const Tensor2 d_dir_stop = stop_head.backward(dir, Tensor2(1, 1, {g.stop}));
    const Tensor2 d_patches = attention_head.backward(rows_of(x, dir_row + 1, n_patch), Tensor2(n_patch, 1, g.attention));
    for (std::size_t j = 0; j < x.cols(); ++j) dx(dir_row, j) = d_dir_wp(0, j) + d_dir_stop(0, j);
    for (std::size_t p = 0; p < n_patch; ++p) {
        for (std::size_t j = 0; j < x.cols(); ++j) dx(dir_row + 1 + p, j) = d_patches(p, j);
    }
    for (std::size_t i = blocks.size(); i-- > 0;) dx = block_backward(blocks[i], caches[i], dx);
    embed_inputs_backward(embed_cache, embedding, cfg_.patch_grid, dx);
    return logits;
}

void TransformerNetwork::visit(const nn::ParameterVisitor& fn) {
    embedding.visit(fn);
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].visit("block" + std::to_string(i), fn);
    waypoint_head.visit("head.waypoint", fn);
    stop_head.visit("head.stop", fn);
    attention_head.visit("head.attention", fn);
}

void TransformerNetwork::zero_heads() {
    for (nn::Linear* head : {&waypoint_head, &stop_head, &attention_head}) {
        head->weight.value.fill(0.0);
        head->bias.value.fill(0.0);
    }
}

}  // namespace avdn
