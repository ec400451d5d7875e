#include <benchmark/benchmark.h>

#include "momap/io.hpp"
#include "momap/render.hpp"
#include "momap/synth.hpp"

namespace momap {
namespace {

void BM_Render(benchmark::State& state) {
  const auto scene = generate(random_scene(9, 64, 64, 50));
  RenderOptions opts;
  opts.splat_radius = static_cast<double>(state.range(0)) / 2.0;
  opts.threads = static_cast<unsigned>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(render(scene.momap, scene.seg, scene.camera, opts));
}
BENCHMARK(BM_Render)->Args({1, 1})->Args({3, 1})->Args({3, 4})->Unit(benchmark::kMillisecond);

void BM_EncodeDecode(benchmark::State& state) {
  const auto scene = generate(random_scene(10, 64, 64, 50));
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_momap(encode_momap(scene.momap, scene.seg, scene.camera)));
  }
}
BENCHMARK(BM_EncodeDecode)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace momap
