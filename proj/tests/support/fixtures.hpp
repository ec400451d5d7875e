#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "momap/momap.hpp"
#include "momap/synth.hpp"

namespace momap::fixture {

/// Directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random positions in [-2, 2]^2 x [0.5, 4]; each pixel covered with
/// probability `coverage`, and each later entry of a covered pixel valid with
/// probability `validity`.
MoMap random_momap(SplitMix64& rng, std::size_t h, std::size_t w, std::size_t t,
                   double coverage = 1.0, double validity = 1.0);

/// Random colors and a random dense segmentation for `m`.
void add_random_colors(SplitMix64& rng, MoMap& m);
SegMap random_segmap(SplitMix64& rng, std::size_t h, std::size_t w, std::uint32_t patches);
Camera random_camera(SplitMix64& rng, std::size_t frames);

/// One row of pixels, one per trajectory.
MoMap from_trajectories(const std::vector<std::vector<Vec3>>& trajs);

std::vector<Vec3> trajectory(const MoMap& m, std::size_t pixel);

/// Sum of a random walk with `t` points starting near the origin.
std::vector<Vec3> random_walk(SplitMix64& rng, std::size_t t, double step = 0.3);

/// A single 9x9-pixel body spanning 0.2 m, translating 0.1 m per frame over a
/// static background, on an h x w x t grid.
SceneSpec small_rigid_body_scene(std::size_t h, std::size_t w, std::size_t t);

}  // namespace momap::fixture

#include <optional>

#include "momap/compress.hpp"
#include "momap/io.hpp"

namespace momap::fixture {

/// Values exactly representable in the f32 file payloads.
double f32(double v);
void round_to_f32(MoMap& m);
void round_to_f32(Camera& cam);

/// Random bundle of dims up to 6x6x7 with random optional sections, already
/// rounded to f32 so a file round trip is exact.
MoMapBundle random_bundle(SplitMix64& rng);
CompressedMoMap random_compressed(SplitMix64& rng);

}  // namespace momap::fixture
