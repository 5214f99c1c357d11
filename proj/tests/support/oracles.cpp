#include "oracles.hpp"

#include <cmath>
#include <random>

namespace avdn::oracle {

Matrix to_matrix(const nn::Tensor2& t) {
    Matrix m(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t(i, j);
    return m;
}

bool inside_square(Vec2 p, Vec2 center, double side, double rotation) {
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);
    const double along = dx * c + dy * s;
    const double across = -dx * s + dy * c;
    return std::abs(along) <= side / 2 && std::abs(across) <= side / 2;
}

double monte_carlo_iou(const ViewArea& a, const ViewArea& b, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    const auto per_axis = static_cast<std::size_t>(std::sqrt(static_cast<double>(samples)));
    const double cell = a.side() / static_cast<double>(per_axis);
    const double c = std::cos(a.rotation());
    const double s = std::sin(a.rotation());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < per_axis; ++i) {
        for (std::size_t j = 0; j < per_axis; ++j) {
            const double u = -a.side() / 2 + (static_cast<double>(i) + jitter(gen)) * cell;
            const double v = -a.side() / 2 + (static_cast<double>(j) + jitter(gen)) * cell;
            const Vec2 p{a.center().x + u * c - v * s, a.center().y + u * s + v * c};
            if (inside_square(p, b.center(), b.side(), b.rotation())) ++hits;
        }
    }
    const double area_a = a.side() * a.side();
    const double area_b = b.side() * b.side();
    const double inter = area_a * static_cast<double>(hits) / static_cast<double>(per_axis * per_axis);
    return inter / (area_a + area_b - inter);
}

namespace {

Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.size(), std::vector<double>(b.front().size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[k].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
}

Matrix linear(const Matrix& x, const nn::Linear& layer) {
    Matrix out = matmul(x, to_matrix(layer.weight.value));
    for (auto& row : out)
        for (std::size_t j = 0; j < row.size(); ++j) row[j] += layer.bias.value(0, j);
    return out;
}

Matrix layer_norm(const Matrix& x, const nn::LayerNorm& ln) {
    Matrix out = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double mean = 0.0;
        for (double v : x[i]) mean += v;
        mean /= static_cast<double>(x[i].size());
        double var = 0.0;
        for (double v : x[i]) var += (v - mean) * (v - mean);
        var /= static_cast<double>(x[i].size());
        for (std::size_t j = 0; j < x[i].size(); ++j) {
            out[i][j] = (x[i][j] - mean) / std::sqrt(var + ln.eps) * ln.gain.value(0, j) + ln.shift.value(0, j);
        }
    }
    return out;
}

double gelu(double v) {
    const double pi = std::acos(-1.0);
    return 0.5 * v * (1.0 + std::tanh(std::sqrt(2.0 / pi) * (v + 0.044715 * v * v * v)));
}

Matrix add(Matrix a, const Matrix& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
    return a;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Matrix loop_attention(const Matrix& x, const Matrix& wq, const Matrix& wk, const Matrix& wv, const Matrix& wo,
                      std::size_t heads) {
    const std::size_t t = x.size();
    const std::size_t d = wq.size();
    const std::size_t dim = d / heads;
    const auto project = [&](const Matrix& w) {
        Matrix out(t, std::vector<double>(d, 0.0));
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < d; ++j)
                for (std::size_t k = 0; k < d; ++k) out[i][j] += x[i][k] * w[k][j];
        return out;
    };
    const Matrix q = project(wq);
    const Matrix k = project(wk);
    const Matrix v = project(wv);
    Matrix concat(t, std::vector<double>(d, 0.0));
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < t; ++i) {
            std::vector<double> score(t);
            for (std::size_t j = 0; j < t; ++j) {
                double dotp = 0.0;
                for (std::size_t e = 0; e < dim; ++e) dotp += q[i][h * dim + e] * k[j][h * dim + e];
                score[j] = dotp / std::sqrt(static_cast<double>(dim));
            }
            double top = score[0];
            for (double sc : score) top = std::max(top, sc);
            double z = 0.0;
            for (double& sc : score) {
                sc = std::exp(sc - top);
                z += sc;
            }
            for (std::size_t j = 0; j < t; ++j)
                for (std::size_t e = 0; e < dim; ++e) concat[i][h * dim + e] += score[j] / z * v[j][h * dim + e];
        }
    }
    Matrix out(t, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t k2 = 0; k2 < d; ++k2) out[i][j] += concat[i][k2] * wo[k2][j];
    return out;
}

HeadLogits transformer_logits(const TransformerNetwork& net, const AgentState& state) {
    const ModelConfig& cfg = net.config();
    const std::size_t d = cfg.d_model;
    const std::size_t grid = cfg.patch_grid;
    const std::size_t block = cfg.obs_resolution / grid;
    const auto& emb = net.embedding;

    Matrix x;
    const auto push_row = [&](std::vector<double> row, std::size_t modality) {
        const std::size_t pos = x.size();
        for (std::size_t j = 0; j < d; ++j) {
            const double exponent = static_cast<double>(2 * (j / 2)) / static_cast<double>(d);
            const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
            row[j] += emb.modality.value(modality, j) + (j % 2 == 0 ? std::sin(angle) : std::cos(angle));
        }
        x.push_back(std::move(row));
    };
    for (int id : state.dialog_tokens.tokens) {
        std::vector<double> row(d);
        for (std::size_t j = 0; j < d; ++j) row[j] = emb.token.value(static_cast<std::size_t>(id), j);
        push_row(std::move(row), 0);
    }
    for (const auto& step : state.history) {
        std::vector<double> dir(d);
        for (std::size_t j = 0; j < d; ++j) {
            dir[j] = step.direction.x * emb.direction.weight.value(0, j) +
                     step.direction.y * emb.direction.weight.value(1, j) + emb.direction.bias.value(0, j);
        }
        push_row(std::move(dir), 1);
        for (std::size_t pr = 0; pr < grid; ++pr) {
            for (std::size_t pc = 0; pc < grid; ++pc) {
                std::vector<double> row(d);
                for (std::size_t j = 0; j < d; ++j) {
                    double acc = emb.patch.bias.value(0, j) + emb.patch_position.value(pr * grid + pc, j);
                    for (std::size_t r = 0; r < block; ++r)
                        for (std::size_t c = 0; c < block; ++c)
                            acc += step.observation.pixel(pr * block + r, pc * block + c) *
                                   emb.patch.weight.value(r * block + c, j);
                    row[j] = acc;
                }
                push_row(std::move(row), 2);
            }
        }
    }

    for (const auto& b : net.blocks) {
        const Matrix attn = loop_attention(x, to_matrix(b.attention.query.value), to_matrix(b.attention.key.value),
                                           to_matrix(b.attention.value.value), to_matrix(b.attention.output.value),
                                           b.attention.n_heads);
        const Matrix mid = layer_norm(add(x, attn), b.norm1);
        Matrix hidden = linear(mid, b.ff_in);
        for (auto& row : hidden)
            for (double& v : row) v = gelu(v);
        x = layer_norm(add(mid, linear(hidden, b.ff_out)), b.norm2);
    }

    const std::size_t n_patch = grid * grid;
    const std::size_t dir_row = x.size() - 1 - n_patch;
    const Matrix dir{x[dir_row]};
    const Matrix wp = linear(dir, net.waypoint_head);
    HeadLogits out;
    out.waypoint = Vec2{wp[0][0], wp[0][1]};
    out.stop = linear(dir, net.stop_head)[0][0];
    for (std::size_t p = 0; p < n_patch; ++p) out.attention.push_back(linear(Matrix{x[dir_row + 1 + p]}, net.attention_head)[0][0]);
    return out;
}

HeadLogits lstm_logits(const LstmNetwork& net, const AgentState& state) {
    const ModelConfig& cfg = net.config();
    const std::size_t hs = cfg.lstm_hidden;
    const std::size_t in = cfg.lstm_input;
    const auto& wx = net.cell.input_weights.value;
    const auto& wh = net.cell.recurrent_weights.value;
    const auto& bias = net.cell.bias.value;
    std::vector<double> h(hs, 0.0);
    std::vector<double> c(hs, 0.0);

    const auto step = [&](const std::vector<double>& xin) {
        std::vector<double> h_next(hs);
        std::vector<double> c_next(hs);
        for (std::size_t u = 0; u < hs; ++u) {
            double gate[4];
            for (std::size_t g = 0; g < 4; ++g) {
                double z = bias(0, g * hs + u);
                for (std::size_t k = 0; k < in; ++k) z += xin[k] * wx(k, g * hs + u);
                for (std::size_t k = 0; k < hs; ++k) z += h[k] * wh(k, g * hs + u);
                gate[g] = z;
            }
            const double i = sigmoid(gate[0]);
            const double f = sigmoid(gate[1]);
            const double o = sigmoid(gate[2]);
            const double cand = std::tanh(gate[3]);
            c_next[u] = f * c[u] + i * cand;
            h_next[u] = o * std::tanh(c_next[u]);
        }
        h = std::move(h_next);
        c = std::move(c_next);
    };

    for (int id : state.dialog_tokens.tokens) {
        std::vector<double> xin(in);
        for (std::size_t k = 0; k < in; ++k) xin[k] = net.token_embedding.value(static_cast<std::size_t>(id), k);
        step(xin);
    }
    const std::size_t grid = cfg.patch_grid;
    const std::size_t block = cfg.obs_resolution / grid;
    for (const auto& s : state.history) {
        std::vector<double> feat{s.direction.x, s.direction.y};
        for (std::size_t pr = 0; pr < grid; ++pr) {
            for (std::size_t pc = 0; pc < grid; ++pc) {
                double sum = 0.0;
                for (std::size_t r = 0; r < block; ++r)
                    for (std::size_t cc = 0; cc < block; ++cc) sum += s.observation.pixel(pr * block + r, pc * block + cc);
                feat.push_back(sum / static_cast<double>(block * block));
            }
        }
        std::vector<double> xin(in);
        for (std::size_t k = 0; k < in; ++k) {
            double acc = net.step_projection.bias.value(0, k);
            for (std::size_t f = 0; f < feat.size(); ++f) acc += feat[f] * net.step_projection.weight.value(f, k);
            xin[k] = acc;
        }
        step(xin);
    }

    const Matrix hm{h};
    const Matrix wp = linear(hm, net.waypoint_head);
    HeadLogits out;
    out.waypoint = Vec2{wp[0][0], wp[0][1]};
    out.stop = linear(hm, net.stop_head)[0][0];
    out.attention = linear(hm, net.attention_head)[0];
    return out;
}

}  // namespace avdn::oracle
