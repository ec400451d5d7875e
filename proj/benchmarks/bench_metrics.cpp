#include <benchmark/benchmark.h>

#include "momap/metrics.hpp"
#include "momap/synth.hpp"

namespace momap {
namespace {

std::vector<MoMap> noisy_copies(const MoMap& gt, std::size_t n) {
  SplitMix64 rng(1);
  std::vector<MoMap> out(n, gt);
  for (auto& m : out)
    for (auto& v : m.positions()) v += 0.02 * rng.normal();
  return out;
}

void BM_DtwAlign(benchmark::State& state) {
  SplitMix64 rng(2);
  const auto t = static_cast<std::size_t>(state.range(0));
  std::vector<Vec3> a(t), b(t);
  for (auto& v : a) v = Vec3(rng.normal(), rng.normal(), rng.normal());
  for (auto& v : b) v = Vec3(rng.normal(), rng.normal(), rng.normal());
  for (auto _ : state) benchmark::DoNotOptimize(dtw_align(a, b));
}
BENCHMARK(BM_DtwAlign)->Arg(16)->Arg(50)->Arg(200);

void BM_BestOfTen(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto scene = generate(random_scene(3, side, side, 50));
  const auto cands = noisy_copies(scene.momap, 10);
  MetricConfig cfg;
  cfg.threads = static_cast<unsigned>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_best_of_n(scene.momap, cands, scene.seg, cfg));
  }
}
BENCHMARK(BM_BestOfTen)->Args({32, 1})->Args({64, 1})->Args({64, 4})->Unit(benchmark::kMillisecond);

void BM_LocalDistDiff(benchmark::State& state) {
  const auto scene = generate(random_scene(4, 64, 64, 50));
  const auto pred = noisy_copies(scene.momap, 1).front();
  MetricConfig cfg;
  cfg.knn = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(local_dist_diff(scene.momap, pred, cfg));
}
BENCHMARK(BM_LocalDistDiff)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace momap
