#include <benchmark/benchmark.h>

#include "momap/infill.hpp"
#include "momap/synth.hpp"

namespace momap {
namespace {

MoMap occluded_scene(std::size_t side, std::size_t frames) {
  const auto scene = generate(random_scene(5, side, side, frames));
  std::vector<std::uint8_t> body(scene.seg.pixels());
  for (std::size_t p = 0; p < body.size(); ++p) body[p] = scene.seg.id(p) != 0;
  return occlude(scene.momap, random_occlusion_intervals(scene.momap, 0.4, 6, body));
}

void BM_EnergyAndGradient(benchmark::State& state) {
  const auto m = occluded_scene(static_cast<std::size_t>(state.range(0)), 50);
  std::vector<std::uint8_t> free(m.pixels() * m.frames());
  for (std::size_t e = 0; e < free.size(); ++e) free[e] = m.valid_mask()[e] ? 0 : 1;
  MoMap filled = m;
  for (auto& v : filled.valid_mask()) v = 1;
  const InfillConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(energy_and_gradient(filled, free, cfg));
}
BENCHMARK(BM_EnergyAndGradient)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Infill(benchmark::State& state) {
  const auto m = occluded_scene(32, 50);
  InfillConfig cfg;
  cfg.init = state.range(0) == 0 ? InfillInit::kInterpolate : InfillInit::kHold;
  cfg.max_iters = 100;
  for (auto _ : state) benchmark::DoNotOptimize(infill(m, cfg));
}
BENCHMARK(BM_Infill)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace momap
