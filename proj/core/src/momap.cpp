#include "momap/momap.hpp"

#include <algorithm>

#include "momap/error.hpp"

namespace momap {

MoMap::MoMap(std::size_t height, std::size_t width, std::size_t frames,
             double time_step)
    : height_(height),
      width_(width),
      frames_(frames),
      time_step_(time_step),
      positions_(height * width * frames * 3, 0.0),
      valid_(height * width * frames, 0) {}

bool MoMap::fully_valid(std::size_t pixel) const noexcept {
  for (std::size_t t = 0; t < frames_; ++t) {
    if (!valid(pixel, t)) return false;
  }
  return true;
}

bool MoMap::fully_valid() const noexcept {
  for (std::size_t p = 0; p < pixels(); ++p) {
    if (covered(p) && !fully_valid(p)) return false;
  }
  return true;
}

void MoMap::set_trajectory(std::size_t pixel, std::span<const Vec3> xs) {
  if (xs.size() != frames_) {
    throw ShapeError("trajectory length " + std::to_string(xs.size()) +
                     " does not match frame count " + std::to_string(frames_));
  }
  for (std::size_t t = 0; t < frames_; ++t) {
    set_position(pixel, t, xs[t]);
    set_valid(pixel, t, true);
  }
}

void MoMap::set_colors(std::vector<double> colors) {
  if (!colors.empty() && colors.size() != pixels() * 3) {
    throw ShapeError("color image has " + std::to_string(colors.size()) +
                     " values, expected " + std::to_string(pixels() * 3));
  }
  colors_ = std::move(colors);
}

SegMap::SegMap(std::size_t height, std::size_t width)
    : height_(height), width_(width), ids_(height * width, kBackground) {}

SegMap::SegMap(std::size_t height, std::size_t width,
               std::vector<std::uint32_t> ids)
    : height_(height), width_(width), ids_(std::move(ids)) {
  if (ids_.size() != height * width) {
    throw ShapeError("segmentation has " + std::to_string(ids_.size()) +
                     " ids, expected " + std::to_string(height * width));
  }
}

std::uint32_t SegMap::max_id() const noexcept {
  std::uint32_t best = kBackground;
  for (auto id : ids_) best = std::max(best, id);
  return best;
}

std::vector<std::uint32_t> SegMap::patch_ids() const {
  std::vector<std::uint32_t> out;
  for (auto id : ids_) {
    if (id != kBackground) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Camera Camera::with_identity_extrinsics(double fx, double fy, double cx,
                                        double cy, std::size_t frames) {
  Camera cam{fx, fy, cx, cy, {}};
  cam.extrinsics.assign(frames, RigidTransform::identity());
  return cam;
}

}  // namespace momap
