#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace momap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Default frame spacing: clips are sampled at 3 frames per second.
inline constexpr double kDefaultTimeStep = 1.0 / 3.0;

/// Dense per-pixel 3D trajectories anchored at a reference frame.
///
/// Every pixel of the reference image owns a trajectory of `frames()` points
/// expressed in the reference camera's coordinate system (meters). Frame 0 is
/// the reference time. `valid(p, t)` marks which entries are defined; a pixel
/// whose frame-0 entry is invalid is "uncovered" and must carry no valid
/// entries at all.
///
/// Storage is row-major by pixel, then frame, then xyz. Pixel indices are
/// flattened as `row * width + col`.
class MoMap {
 public:
  MoMap() = default;
  /// All positions zero, all entries invalid.
  MoMap(std::size_t height, std::size_t width, std::size_t frames,
        double time_step = kDefaultTimeStep);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t frames() const noexcept { return frames_; }
  std::size_t pixels() const noexcept { return height_ * width_; }
  double time_step() const noexcept { return time_step_; }
  void set_time_step(double dt) noexcept { time_step_ = dt; }

  std::size_t pixel_index(std::size_t row, std::size_t col) const noexcept {
    return row * width_ + col;
  }
  std::size_t entry_index(std::size_t pixel, std::size_t t) const noexcept {
    return pixel * frames_ + t;
  }

  Vec3 position(std::size_t pixel, std::size_t t) const noexcept {
    const double* p = &positions_[3 * entry_index(pixel, t)];
    return {p[0], p[1], p[2]};
  }
  void set_position(std::size_t pixel, std::size_t t, const Vec3& x) noexcept {
    double* p = &positions_[3 * entry_index(pixel, t)];
    p[0] = x.x();
    p[1] = x.y();
    p[2] = x.z();
  }

  bool valid(std::size_t pixel, std::size_t t) const noexcept {
    return valid_[entry_index(pixel, t)] != 0;
  }
  void set_valid(std::size_t pixel, std::size_t t, bool v) noexcept {
    valid_[entry_index(pixel, t)] = v ? 1 : 0;
  }

  /// A pixel is covered when its reference-frame entry is valid.
  bool covered(std::size_t pixel) const noexcept { return valid(pixel, 0); }
  /// Covered and valid at every frame.
  bool fully_valid(std::size_t pixel) const noexcept;
  /// Every covered pixel is valid at every frame.
  bool fully_valid() const noexcept;

  /// Sets a pixel's whole trajectory and marks all its entries valid.
  void set_trajectory(std::size_t pixel, std::span<const Vec3> xs);

  std::span<double> positions() noexcept { return positions_; }
  std::span<const double> positions() const noexcept { return positions_; }
  std::span<std::uint8_t> valid_mask() noexcept { return valid_; }
  std::span<const std::uint8_t> valid_mask() const noexcept { return valid_; }

  bool has_colors() const noexcept { return !colors_.empty(); }
  /// H*W*3 unit-interval RGB, or empty.
  std::span<const double> colors() const noexcept { return colors_; }
  std::span<double> colors() noexcept { return colors_; }
  Vec3 color(std::size_t pixel) const noexcept {
    return {colors_[3 * pixel], colors_[3 * pixel + 1], colors_[3 * pixel + 2]};
  }
  /// Throws ShapeError unless colors.size() == H*W*3; empty clears colors.
  void set_colors(std::vector<double> colors);

  friend bool operator==(const MoMap&, const MoMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t frames_ = 0;
  double time_step_ = kDefaultTimeStep;
  std::vector<double> positions_;
  std::vector<std::uint8_t> valid_;
  std::vector<double> colors_;
};

/// Per-pixel patch identifiers aligned with a MoMap's reference frame.
/// Identifier 0 is the background.
class SegMap {
 public:
  static constexpr std::uint32_t kBackground = 0;

  SegMap() = default;
  SegMap(std::size_t height, std::size_t width);
  SegMap(std::size_t height, std::size_t width, std::vector<std::uint32_t> ids);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixels() const noexcept { return height_ * width_; }

  std::uint32_t id(std::size_t pixel) const noexcept { return ids_[pixel]; }
  void set_id(std::size_t pixel, std::uint32_t id) noexcept { ids_[pixel] = id; }
  std::span<const std::uint32_t> ids() const noexcept { return ids_; }

  std::uint32_t max_id() const noexcept;
  /// Sorted distinct non-background identifiers.
  std::vector<std::uint32_t> patch_ids() const;

  friend bool operator==(const SegMap&, const SegMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint32_t> ids_;
};

/// Rigid motion x -> R x + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  /// this ∘ first: applies `first`, then this.
  RigidTransform after(const RigidTransform& first) const {
    return {rotation * first.rotation, rotation * first.translation + translation};
  }

  friend bool operator==(const RigidTransform&, const RigidTransform&) = default;
};

/// Rotation tolerance used for in-memory transforms.
inline constexpr double kRotationTolerance = 1e-9;

/// Empty when R is orthonormal with det +1 within `tol`.
std::optional<std::string> rotation_violation(const Mat3& r, double tol = kRotationTolerance);

/// Pinhole intrinsics plus one world-to-camera transform per frame.
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  std::vector<RigidTransform> extrinsics;

  std::size_t frames() const noexcept { return extrinsics.size(); }

  static Camera with_identity_extrinsics(double fx, double fy, double cx,
                                         double cy, std::size_t frames);

  friend bool operator==(const Camera&, const Camera&) = default;
};

/// Violations of Camera invariants; empty when well formed.
std::vector<std::string> validate_camera(const Camera& cam,
                                         double rotation_tol = kRotationTolerance);

/// One description per violated MoMap invariant, naming the first offending
/// (row,col,frame) index. Never throws.
std::vector<std::string> validate_momap(const MoMap& m);

/// Violations of SegMap invariants against the expected dimensions.
std::vector<std::string> validate_segmap(const SegMap& seg, std::size_t height,
                                         std::size_t width);

/// Applies g to every valid position; the mask is unchanged.
/// Throws ValidationError if g's rotation is not a proper rotation.
MoMap apply_rigid(const MoMap& m, const RigidTransform& g);

}  // namespace momap
