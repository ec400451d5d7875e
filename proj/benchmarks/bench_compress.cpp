#include <benchmark/benchmark.h>

#include "momap/compress.hpp"
#include "momap/synth.hpp"

namespace momap {
namespace {

void BM_Compress(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto scene = generate(random_scene(7, side, side, 50));
  for (auto _ : state) benchmark::DoNotOptimize(compress(scene.momap, kDefaultLatentChannels));
}
BENCHMARK(BM_Compress)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Decompress(benchmark::State& state) {
  const auto scene = generate(random_scene(8, 64, 64, 50));
  const auto code = compress(scene.momap, kDefaultLatentChannels);
  for (auto _ : state) benchmark::DoNotOptimize(decompress(code, 50));
}
BENCHMARK(BM_Decompress)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace momap
