#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "momap/momap.hpp"

namespace momap {

/// Axis-aligned pixel rectangle in the reference image.
struct PixelRect {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Constant velocity in meters per second.
struct LinearMotion {
  Vec3 velocity = Vec3::Zero();
  friend bool operator==(const LinearMotion&, const LinearMotion&) = default;
};

/// Rotation about a line through `origin` along `axis`, combined with a
/// translation of `pitch` meters per radian along the axis.
struct ScrewMotion {
  Vec3 axis = Vec3::UnitZ();
  Vec3 origin = Vec3::Zero();
  double angular_velocity = 0.0;  // rad/s
  double pitch = 0.0;             // m/rad
  friend bool operator==(const ScrewMotion&, const ScrewMotion&) = default;
};

/// Piecewise-linear offsets keyed by frame index. The offset curve is held
/// constant outside the key range; trajectories are re-based so that the
/// displacement at frame 0 is zero.
struct WaypointMotion {
  std::vector<double> frames;
  std::vector<Vec3> offsets;
  friend bool operator==(const WaypointMotion&, const WaypointMotion&) = default;
};

using BodyMotion = std::variant<LinearMotion, ScrewMotion, WaypointMotion>;

struct RigidBodySpec {
  PixelRect region;
  /// Optional explicit member pixels (row, col); replaces `region` when set.
  std::vector<std::pair<std::size_t, std::size_t>> mask;
  double depth = 1.0;  // meters at t = 0
  BodyMotion motion = LinearMotion{};

  friend bool operator==(const RigidBodySpec&, const RigidBodySpec&) = default;
};

struct SceneSpec {
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t frames = 8;
  double time_step = kDefaultTimeStep;
  double background_depth = 5.0;
  double fx = 16.0;
  double fy = 16.0;
  double cx = 7.5;
  double cy = 7.5;
  std::vector<RigidBodySpec> bodies;
  std::uint64_t seed = 0;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct GeneratedScene {
  MoMap momap;
  SegMap seg;
  Camera camera;
};

/// Position at frame t of a body point that starts at p0.
Vec3 body_position(const BodyMotion& motion, const Vec3& p0, std::size_t t,
                   double time_step);

/// Back-projects pixel (row, col) through the pinhole intrinsics at `depth`.
Vec3 back_project(double fx, double fy, double cx, double cy, double row,
                  double col, double depth);

/// Renders the rigid-body scene into a fully valid MoMap with reference
/// colors, a segmentation (0 = background, i+1 = bodies[i]) and the
/// reference camera with identity extrinsics. Throws ValidationError on
/// overlapping or out-of-bounds regions and on a degenerate camera.
GeneratedScene generate(const SceneSpec& spec);

/// Per-pixel inclusive frame intervals to hide.
struct OcclusionInterval {
  std::size_t pixel = 0;
  std::size_t t_start = 0;
  std::size_t t_end = 0;  // inclusive
};

/// Marks the intervals invalid and zeroes the hidden positions. Throws
/// ValidationError for intervals touching frame 0 or out of range.
MoMap occlude(const MoMap& m, const std::vector<OcclusionInterval>& intervals);

/// Draws intervals hiding roughly `fraction` of the non-reference entries of
/// every covered pixel (or only pixels in `pixel_mask` when non-empty).
/// Deterministic given the seed.
std::vector<OcclusionInterval> random_occlusion_intervals(
    const MoMap& m, double fraction, std::uint64_t seed,
    const std::vector<std::uint8_t>& pixel_mask = {});

/// Random scene of non-overlapping moving boxes (at least two when
/// max_bodies >= 2, each at least 3x3 pixels) with mixed motion types.
SceneSpec random_scene(std::uint64_t seed, std::size_t height, std::size_t width,
                       std::size_t frames, std::size_t max_bodies = 3);

/// JSON form of a scene. Throws ParseError with the offending path.
SceneSpec scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const SceneSpec& spec);

/// Small deterministic generator (splitmix64) with portable uniform draws.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * n); }
  /// Standard normal via Box-Muller.
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

/// Uniformly random rotation (unit quaternion) and translation in a box.
RigidTransform random_rigid(SplitMix64& rng, double translation_range = 1.0);

}  // namespace momap
