#include <benchmark/benchmark.h>

#include "avdn/checkpoint.hpp"
#include "avdn/nn/attention.hpp"
#include "avdn/rng.hpp"
#include "avdn/simulator.hpp"

namespace {

void BM_AttentionForward(benchmark::State& state) {
    const auto t = static_cast<std::size_t>(state.range(0));
    avdn::Rng rng(2);
    avdn::nn::AttentionParams p(32, 4);
    p.init(rng, 0.1);
    const auto x = avdn::nn::random_normal(t, 32, 1.0, rng);
    for (auto _ : state) benchmark::DoNotOptimize(avdn::nn::self_attention(x, p));
}
BENCHMARK(BM_AttentionForward)->Arg(17)->Arg(64)->Arg(128);

avdn::Checkpoint fresh_checkpoint(avdn::ModelKind kind) {
    avdn::ModelConfig cfg;
    cfg.kind = kind;
    return avdn::make_checkpoint(*avdn::make_network(cfg, 3), 0, 3);
}

void BM_PolicyDecide(benchmark::State& state) {
    const auto kind = static_cast<avdn::ModelKind>(state.range(0));
    const auto policy = avdn::make_policy(fresh_checkpoint(kind));
    const avdn::Episode ep = avdn::generate_episode(4);
    const std::vector<avdn::ViewArea> views(ep.gt_trajectory.views().begin(), ep.gt_trajectory.views().end());
    const auto s = avdn::make_agent_state(ep, views, ep.dialog.size());
    for (auto _ : state) benchmark::DoNotOptimize(policy->decide(s));
}
BENCHMARK(BM_PolicyDecide)
    ->Arg(static_cast<int>(avdn::ModelKind::transformer))
    ->Arg(static_cast<int>(avdn::ModelKind::lstm));

void BM_Rollout(benchmark::State& state) {
    const auto policy = avdn::make_policy(fresh_checkpoint(avdn::ModelKind::transformer));
    const auto eps = avdn::generate_episodes(5, 8);
    for (auto _ : state) benchmark::DoNotOptimize(avdn::run_split(*policy, eps, {}, 1));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(eps.size()));
}
BENCHMARK(BM_Rollout)->Unit(benchmark::kMillisecond);

void BM_OracleRollout(benchmark::State& state) {
    const auto eps = avdn::generate_episodes(6, 32);
    for (auto _ : state) benchmark::DoNotOptimize(avdn::run_oracle_split(eps));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(eps.size()));
}
BENCHMARK(BM_OracleRollout)->Unit(benchmark::kMillisecond);

}  // namespace
