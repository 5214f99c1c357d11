#include <benchmark/benchmark.h>

#include <numbers>

#include "avdn/geometry.hpp"
#include "avdn/rng.hpp"

namespace {

void BM_Iou(benchmark::State& state) {
    avdn::Rng rng(1);
    std::vector<std::pair<avdn::ViewArea, avdn::ViewArea>> pairs;
    for (int i = 0; i < 256; ++i) {
        const avdn::ViewArea a({rng.uniform(0, 10), rng.uniform(0, 10)}, rng.uniform(2, 6), rng.uniform(0, 2 * std::numbers::pi));
        const avdn::ViewArea b({rng.uniform(0, 10), rng.uniform(0, 10)}, rng.uniform(2, 6), rng.uniform(0, 2 * std::numbers::pi));
        pairs.emplace_back(a, b);
    }
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& [a, b] = pairs[i++ & 255];
        benchmark::DoNotOptimize(avdn::iou(a, b));
    }
}
BENCHMARK(BM_Iou);

}  // namespace
