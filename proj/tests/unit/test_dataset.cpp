#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "avdn/dataset.hpp"
#include "avdn/errors.hpp"
#include "avdn/vocabulary.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace avdn;
using avdn::test::square;

TEST_CASE("generator is deterministic") {
    CHECK(episode_to_json(generate_episode(17)) == episode_to_json(generate_episode(17)));
    CHECK(episode_to_json(generate_episode(17)) != episode_to_json(generate_episode(18)));
    const auto eps = generate_episodes(40, 3);
    CHECK(eps[2].id == "ep-42");
}

TEST_CASE("generated episodes satisfy the record invariants") {
    const auto eps = generate_episodes(1, 50);
    for (const auto& e : eps) {
        CHECK_NOTHROW(validate_episode(e));
        CHECK(e.dialog.size() == static_cast<std::size_t>(e.max_steps));
        CHECK(e.gt_trajectory.size() <= static_cast<std::size_t>(e.max_steps) + 1);
        CHECK(e.gt_attention.size() == e.gt_trajectory.size());
        for (const auto& v : e.gt_trajectory.views()) CHECK(view_inside_world(v, e.world_side));
        CHECK(view_inside_world(e.goal, e.world_side));
        for (std::size_t k = 0; k < e.gt_trajectory.size(); ++k) {
            // masks vanish where the goal misses a cell
            const auto expect = goal_attention_mask(e.gt_trajectory.views()[k], e.goal, e.gt_attention[k].grid_size());
            for (std::size_t i = 0; i < expect.values().size(); ++i) {
                if (expect.values()[i] == 0.0) CHECK(e.gt_attention[k].values()[i] == 0.0);
            }
        }
    }
}

TEST_CASE("goal on the start view gives a one-view trajectory") {
    GeneratorConfig cfg;
    cfg.min_goal_distance = 0.0;
    cfg.max_goal_distance = 1e-9;
    const Episode e = generate_episode(3, cfg);
    CHECK(e.gt_trajectory.size() == 1);
    double sum = 0.0;
    for (double v : e.gt_attention.front().values()) sum += v;
    CHECK(sum > 0.0);
}

TEST_CASE("style fractions are near the configured targets") {
    const auto eps = generate_episodes(5000, 400);
    std::size_t ego = 0;
    std::size_t allo = 0;
    std::size_t total = 0;
    for (const auto& e : eps) {
        for (const auto& r : e.dialog) {
            ++total;
            ego += has_egocentric_phrase(r.style) ? 1 : 0;
            allo += has_allocentric_phrase(r.style) ? 1 : 0;
        }
    }
    const double fe = static_cast<double>(ego) / static_cast<double>(total);
    const double fa = static_cast<double>(allo) / static_cast<double>(total);
    CHECK(fe > 0.76);
    CHECK(fe < 0.88);
    CHECK(fa > 0.24);
    CHECK(fa < 0.36);
}

TEST_CASE("instruction classification") {
    CHECK(classify_instruction("turn left and go straight") == InstructionStyle::egocentric);
    CHECK(classify_instruction("head north") == InstructionStyle::allocentric);
    CHECK(classify_instruction("turn right then fly east") == InstructionStyle::mixed);
}

TEST_CASE("episode JSON round trip and file persistence") {
    test::TempDir dir;
    const auto eps = generate_episodes(77, 10);
    save_episodes(eps, dir / "eps.jsonl");
    CHECK(load_episodes(dir / "eps.jsonl") == eps);

    std::ofstream(dir / "empty.jsonl").close();
    CHECK(load_episodes(dir / "empty.jsonl").empty());
}

TEST_CASE("missing field names line and field") {
    test::TempDir dir;
    const auto eps = generate_episodes(5, 2);
    std::string second = episode_to_json(eps[1]);
    const auto at = second.find("\"goal\"");
    REQUIRE(at != std::string::npos);
    second.replace(at, 6, "\"gaol\"");
    {
        std::ofstream out(dir / "bad.jsonl");
        out << episode_to_json(eps[0]) << "\n" << second << "\n";
    }
    try {
        load_episodes(dir / "bad.jsonl");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        const std::string what = e.what();
        CHECK(what.find("line 2") != std::string::npos);
        CHECK(what.find("goal") != std::string::npos);
    }
}

TEST_CASE("split_dataset") {
    const auto eps = generate_episodes(0, 10);
    const auto s = split_dataset(eps, {0.8, 0.1, 0.1}, 4);
    CHECK(s.train.size() == 8);
    CHECK(s.val.size() == 1);
    CHECK(s.test.size() == 1);
    const auto again = split_dataset(eps, {0.8, 0.1, 0.1}, 4);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto r = split_dataset(eps, {0.5, 0.25, 0.25}, seed);
        std::multiset<std::string> ids;
        for (const auto* part : {&r.train, &r.val, &r.test})
            for (const auto& e : *part) ids.insert(e.id);
        CHECK(ids.size() == eps.size());
        CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == eps.size());
    }
    CHECK_THROWS_AS(split_dataset(std::span(eps.data(), 2), {0.8, 0.1, 0.1}, 0), ValidationError);
    CHECK_THROWS_AS(split_dataset(eps, {0.8, 0.1, 0.2}, 0), ValidationError);
}

TEST_CASE("rasterize_observation") {
    const std::uint64_t map = 99;
    const ViewArea v = square(120, 140, 40, 0.7);
    const auto a = rasterize_observation(map, 300, v, 16);
    CHECK(a == rasterize_observation(map, 300, v, 16));
    CHECK(a.pixels != rasterize_observation(map, 300, square(220, 60, 40, 0.7), 16).pixels);
    for (double p : a.pixels) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    const auto turned = rasterize_observation(map, 300, square(120, 140, 40, 0.7 + std::numbers::pi), 16);
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 16; ++c) CHECK(std::abs(turned.pixel(r, c) - a.pixel(15 - r, 15 - c)) < 1e-9);
    CHECK_THROWS_AS(rasterize_observation(map, 300, square(5, 140, 40), 16), ValidationError);
}

TEST_CASE("augmentation") {
    Observation obs;
    obs.resolution = 4;
    obs.direction = Vec2{1, 0};
    for (int i = 0; i < 16; ++i) obs.pixels.push_back(0.05 * i);
    AttentionMask mask(2);
    mask.at(0, 1) = 1.0;
    const AugmentedSample s{obs, mask, Vec2{3, 5}};

    const auto hh = flip_horizontal(flip_horizontal(s));
    CHECK(hh.observation == s.observation);
    CHECK(hh.mask == s.mask);
    CHECK(hh.waypoint == s.waypoint);
    const auto vv = flip_vertical(flip_vertical(s));
    CHECK(vv.observation == s.observation);

    // goal marked top-right; waypoint to the right, so the flips keep them in register
    const auto h = flip_horizontal(s);
    CHECK(h.mask.at(0, 0) == 1.0);
    CHECK(h.waypoint == Vec2{-3, 5});
    CHECK(h.observation.pixel(0, 0) == obs.pixel(0, 3));
    const auto v = flip_vertical(s);
    CHECK(v.mask.at(1, 1) == 1.0);
    CHECK(v.waypoint == Vec2{3, -5});

    Observation flat = obs;
    std::fill(flat.pixels.begin(), flat.pixels.end(), 0.3);
    CHECK(box_blur(flat) == flat);

    AugmentConfig noisy;
    noisy.noise_probability = 1.0;
    noisy.noise_epsilon = 0.1;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto n = augment(obs, mask, Vec2{}, noisy, seed);
        for (std::size_t i = 0; i < 16; ++i) {
            CHECK(std::abs(n.observation.pixels[i] - obs.pixels[i]) <= 0.1 + 1e-15);
            CHECK(n.observation.pixels[i] >= 0.0);
            CHECK(n.observation.pixels[i] <= 1.0);
        }
        CHECK(n.observation == augment(obs, mask, Vec2{}, noisy, seed).observation);
    }
}

TEST_CASE("tokenizer markers") {
    std::vector<DialogRound> one{{std::nullopt, "turn right", InstructionStyle::egocentric}};
    const auto t = tokenize_dialog(one);
    const auto& v = default_vocabulary();
    CHECK(t.tokens == std::vector<int>{kInstructionMarker, v.id("turn"), v.id("right")});

    std::vector<DialogRound> two{{std::string("which way"), "head south", InstructionStyle::allocentric}};
    const auto q = tokenize_dialog(two);
    CHECK(q.tokens ==
          std::vector<int>{kQuestionMarker, v.id("which"), v.id("way"), kInstructionMarker, v.id("head"), v.id("south")});
    CHECK(q.question_markers == std::vector<std::size_t>{0});
    CHECK(q.instruction_markers == std::vector<std::size_t>{3});
    CHECK(tokenize_dialog({}).tokens.empty());
    CHECK(tokenize_dialog(std::vector<DialogRound>{{std::nullopt, "Zzyzx!", InstructionStyle::egocentric}}).tokens[1] ==
          kUnknownToken);

    for (const auto& e : generate_episodes(60, 20)) {
        const auto seq = tokenize_dialog(e.dialog);
        std::size_t questions = 0;
        for (const auto& r : e.dialog) questions += r.question ? 1 : 0;
        CHECK(seq.instruction_markers.size() == e.dialog.size());
        CHECK(seq.question_markers.size() == questions);
    }
}

TEST_CASE("vocabulary file round trip") {
    test::TempDir dir;
    default_vocabulary().save(dir / "vocab.txt");
    const auto back = Vocabulary::load(dir / "vocab.txt");
    CHECK(back.size() == default_vocabulary().size());
    CHECK(back.id("north") == default_vocabulary().id("north"));
    CHECK_THROWS_AS(Vocabulary({"a", "b", "c"}), ValidationError);
}
