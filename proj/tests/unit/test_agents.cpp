#include <cmath>

#include "avdn/checkpoint.hpp"
#include "avdn/errors.hpp"
#include "avdn/models.hpp"
#include "avdn/rng.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace avdn;

namespace {

// Two-step state from a generated episode, first two rounds visible.
AgentState two_step_state(std::size_t resolution) {
    const Episode e = generate_episode(808);
    std::vector<ViewArea> views{e.start_view, e.gt_trajectory.size() > 1 ? e.gt_trajectory.views()[1] : e.start_view};
    return make_agent_state(e, views, 2, resolution);
}

template <class Net>
Net& as(PolicyNetwork& net) {
    return dynamic_cast<Net&>(net);
}

}  // namespace

TEST_CASE("embedding layout: 0 tokens, 1 step, P=4 gives 17 rows") {
    ModelConfig cfg;
    const Episode e = generate_episode(1);
    AgentState s = make_agent_state(e, std::vector<ViewArea>{e.start_view}, 0, cfg.obs_resolution);
    REQUIRE(s.dialog_tokens.tokens.empty());
    auto net = make_network(cfg, 3);
    const auto& t = as<TransformerNetwork>(*net);
    const auto x = embed_inputs(s, t.embedding, cfg.patch_grid);
    CHECK(x.rows() == 17);
    CHECK(x.cols() == cfg.d_model);
    CHECK(x == embed_inputs(s, t.embedding, cfg.patch_grid));
}

TEST_CASE("swapping two vocabulary rows only moves the rows that use them") {
    const ModelConfig cfg = test::tiny_config(ModelKind::transformer);
    const AgentState s = two_step_state(cfg.obs_resolution);
    auto net = make_network(cfg, 5);
    auto& t = as<TransformerNetwork>(*net);
    const auto before = embed_inputs(s, t.embedding, cfg.patch_grid);

    const int used = s.dialog_tokens.tokens.at(1);
    int unused = 3;
    while (std::find(s.dialog_tokens.tokens.begin(), s.dialog_tokens.tokens.end(), unused) != s.dialog_tokens.tokens.end())
        ++unused;
    int unused2 = unused + 1;
    while (std::find(s.dialog_tokens.tokens.begin(), s.dialog_tokens.tokens.end(), unused2) !=
           s.dialog_tokens.tokens.end())
        ++unused2;

    auto swap_rows = [&](int a, int b) {
        auto& tab = t.embedding.token.value;
        for (std::size_t j = 0; j < tab.cols(); ++j)
            std::swap(tab(static_cast<std::size_t>(a), j), tab(static_cast<std::size_t>(b), j));
    };

    swap_rows(unused, unused2);
    CHECK(embed_inputs(s, t.embedding, cfg.patch_grid) == before);
    swap_rows(unused, unused2);

    swap_rows(used, unused);
    const auto after = embed_inputs(s, t.embedding, cfg.patch_grid);
    AgentState relabeled = s;
    for (int& id : relabeled.dialog_tokens.tokens)
        if (id == used) id = unused;
    swap_rows(used, unused);
    const auto expect = embed_inputs(relabeled, t.embedding, cfg.patch_grid);
    for (std::size_t r = 0; r < before.rows(); ++r) {
        const bool is_used = r < s.dialog_tokens.tokens.size() && s.dialog_tokens.tokens[r] == used;
        for (std::size_t j = 0; j < before.cols(); ++j) {
            CHECK(after(r, j) == expect(r, j));
            if (!is_used) CHECK(after(r, j) == before(r, j));
        }
    }
}

TEST_CASE("transformer forward matches the loop-level oracle") {
    for (const ModelConfig& cfg : {test::tiny_config(ModelKind::transformer), ModelConfig{}}) {
        const AgentState s = two_step_state(cfg.obs_resolution);
        auto net = make_network(cfg, 11);
        const auto& t = as<TransformerNetwork>(*net);
        const HeadLogits got = t.forward(s);
        const HeadLogits ref = oracle::transformer_logits(t, s);
        CHECK(std::abs(got.waypoint.x - ref.waypoint.x) < 1e-10);
        CHECK(std::abs(got.waypoint.y - ref.waypoint.y) < 1e-10);
        CHECK(std::abs(got.stop - ref.stop) < 1e-10);
        REQUIRE(got.attention.size() == ref.attention.size());
        for (std::size_t i = 0; i < ref.attention.size(); ++i) CHECK(std::abs(got.attention[i] - ref.attention[i]) < 1e-10);
    }
}

TEST_CASE("LSTM forward matches a hand-rolled recurrence") {
    const ModelConfig cfg = test::tiny_config(ModelKind::lstm);
    const Episode e = generate_episode(12);
    const AgentState one = make_agent_state(e, std::vector<ViewArea>{e.start_view}, 1, cfg.obs_resolution);
    const AgentState two = two_step_state(cfg.obs_resolution);
    auto net = make_network(cfg, 13);
    const auto& l = as<LstmNetwork>(*net);
    for (const AgentState* s : {&one, &two}) {
        const HeadLogits got = l.forward(*s);
        const HeadLogits ref = oracle::lstm_logits(l, *s);
        CHECK(std::abs(got.waypoint.x - ref.waypoint.x) < 1e-12);
        CHECK(std::abs(got.waypoint.y - ref.waypoint.y) < 1e-12);
        CHECK(std::abs(got.stop - ref.stop) < 1e-12);
        for (std::size_t i = 0; i < ref.attention.size(); ++i) CHECK(std::abs(got.attention[i] - ref.attention[i]) < 1e-12);
    }
}

TEST_CASE("zero heads: no motion, even odds, uniform attention") {
    for (ModelKind kind : {ModelKind::transformer, ModelKind::lstm}) {
        ModelConfig cfg = test::tiny_config(kind);
        const AgentState s = two_step_state(cfg.obs_resolution);
        auto net = make_network(cfg, 21);
        net->zero_heads();
        NetworkPolicy policy(std::move(net));
        const AgentOutput out = policy.decide(s);
        CHECK(out.next_center == s.current_view.center());
        CHECK(out.next_rotation == s.current_view.rotation());
        CHECK(out.stop_prob == 0.5);
        CHECK(out.attention.grid_size() == cfg.patch_grid);
        for (double v : out.attention.values()) CHECK(v == 0.5);
    }
}

TEST_CASE("zero LSTM weights") {
    ModelConfig cfg = test::tiny_config(ModelKind::lstm);
    auto net = make_network(cfg, 1);
    net->visit([](const std::string&, nn::Parameter& p) { p.value.fill(0.0); });
    const AgentState s = two_step_state(cfg.obs_resolution);
    const AgentOutput out = NetworkPolicy(std::move(net)).decide(s);
    CHECK(out.stop_prob == 0.5);
    CHECK(out.next_center == s.current_view.center());
    for (double v : out.attention.values()) CHECK(v == 0.5);
}

TEST_CASE("policies are pure and head ranges hold for large weights") {
    for (ModelKind kind : {ModelKind::transformer, ModelKind::lstm}) {
        ModelConfig cfg = test::tiny_config(kind);
        const AgentState s = two_step_state(cfg.obs_resolution);
        auto net = make_network(cfg, 4);
        Rng rng(9);
        net->visit([&](const std::string&, nn::Parameter& p) {
            for (double& v : p.value.data()) v = 20.0 * rng.normal();
        });
        const Checkpoint ck = make_checkpoint(*net, 0, 4);
        const AgentOutput a = make_policy(ck)->decide(s);
        const AgentOutput b = make_policy(ck)->decide(s);
        CHECK(a == b);
        CHECK(a.stop_prob >= 0.0);
        CHECK(a.stop_prob <= 1.0);
        for (double v : a.attention.values()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(distance(a.next_center, s.current_view.center()) <= cfg.step_max * std::sqrt(2.0) + 1e-9);
    }
}

TEST_CASE("kind mismatch is rejected") {
    auto t = make_network(test::tiny_config(ModelKind::transformer), 1);
    auto l = make_network(test::tiny_config(ModelKind::lstm), 1);
    const Checkpoint tc = make_checkpoint(*t, 0, 1);
    const Checkpoint lc = make_checkpoint(*l, 0, 1);
    const AgentState s = two_step_state(4);
    CHECK_NOTHROW(transformer_policy(s, tc));
    CHECK_NOTHROW(lstm_policy(s, lc));
    CHECK_THROWS_AS(transformer_policy(s, lc), ValidationError);
    CHECK_THROWS_AS(lstm_policy(s, tc), ValidationError);
    CHECK(transformer_policy(s, tc) == make_policy(tc)->decide(s));
}

TEST_CASE("decode_head_logits works in the body frame") {
    const ViewArea v(Vec2{100, 100}, 40, std::numbers::pi / 2);  // facing +y
    AgentState s;
    s.current_view = v;
    HeadLogits logits;
    logits.waypoint = Vec2{0.0, 50.0};  // straight ahead, saturated
    logits.attention.assign(16, 0.0);
    const AgentOutput out = decode_head_logits(logits, s, 30.0);
    CHECK(out.next_center.x == doctest::Approx(100.0));
    CHECK(out.next_center.y == doctest::Approx(130.0));
    CHECK(out.next_rotation == doctest::Approx(std::numbers::pi / 2));
    logits.waypoint = Vec2{std::atanh(0.5), 0.0};  // right of +y is +x
    const AgentOutput right = decode_head_logits(logits, s, 30.0);
    CHECK(right.next_center.x == doctest::Approx(115.0));
    CHECK(right.next_center.y == doctest::Approx(100.0));
    CHECK(right.next_rotation == doctest::Approx(0.0));
}

TEST_CASE("oracle policy examples") {
    const ViewArea here(Vec2{100, 100}, 40, 0);
    AgentState s;
    s.current_view = here;
    CHECK(oracle_policy(s, here, 30).stop_prob == 1.0);

    const ViewArea east(Vec2{110, 100}, 40, 0);
    s.current_view = ViewArea(Vec2{100, 100}, 4, 0);
    const AgentOutput step = oracle_policy(s, ViewArea(Vec2{110, 100}, 4, 0), 3);
    CHECK(step.next_center.x == doctest::Approx(103.0));
    CHECK(step.next_center.y == doctest::Approx(100.0));
    CHECK(step.stop_prob == 0.0);
    const AgentOutput mask = oracle_policy(s, east, 30, 0.4, 4);
    CHECK(mask.attention == goal_attention_mask(s.current_view, east, 4));

    // clipped stepping reaches the goal within ceil(d / step) + 1 decisions
    Rng rng(2);
    for (int k = 0; k < 200; ++k) {
        const double step_max = rng.uniform(1, 10);
        const ViewArea goal(Vec2{rng.uniform(-50, 50), rng.uniform(-50, 50)}, 5, 0);
        ViewArea cur(Vec2{rng.uniform(-50, 50), rng.uniform(-50, 50)}, 5, 0);
        const int bound = static_cast<int>(std::ceil(distance(cur.center(), goal.center()) / step_max)) + 1;
        int decisions = 0;
        for (;;) {
            AgentState st;
            st.current_view = cur;
            const AgentOutput o = oracle_policy(st, goal, step_max);
            ++decisions;
            if (o.stop_prob >= 0.5) break;
            cur = cur.moved_to(o.next_center, o.next_rotation);
            REQUIRE(decisions <= bound);
        }
        CHECK(decisions <= bound);
        CHECK(iou(cur, goal) >= 0.4);
    }
}

TEST_CASE("checkpoint serialization round trip") {
    test::TempDir dir;
    for (ModelKind kind : {ModelKind::transformer, ModelKind::lstm}) {
        auto net = make_network(test::tiny_config(kind), 8);
        Checkpoint ck = make_checkpoint(*net, 250, 8);
        ck.train_loss = 0.5;
        const auto path = dir / (std::string(to_string(kind)) + ".ckpt");
        save_checkpoint(ck, path);
        const Checkpoint back = load_checkpoint(path);
        CHECK(back == ck);
        CHECK(serialize_checkpoint(back) == serialize_checkpoint(ck));
        auto rebuilt = network_from_checkpoint(back);
        CHECK(make_checkpoint(*rebuilt, 250, 8).tensors == ck.tensors);
    }
    CHECK_THROWS_AS(parse_checkpoint("garbage"), FormatError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), FormatError);
}

TEST_CASE("AgentState validation") {
    const AgentState good = two_step_state(4);
    CHECK_NOTHROW(good.validate());
    AgentState bad = good;
    bad.step_index = 5;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_THROWS_AS(make_network(test::tiny_config(ModelKind::transformer), 0)->forward(bad), ValidationError);
}
