#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "momap/momap.hpp"

namespace momap {

/// One rendered frame. Pixels no point landed on are holes: black color,
/// infinite depth, seg == kHoleSeg and source == kNoSource.
struct PartialFrame {
  static constexpr std::uint32_t kHoleSeg = std::numeric_limits<std::uint32_t>::max();
  static constexpr std::int64_t kNoSource = -1;

  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> color;          // H*W*3
  std::vector<std::uint32_t> seg;     // H*W
  std::vector<std::uint8_t> hole;     // H*W
  std::vector<double> depth;          // H*W, +inf at holes
  std::vector<std::int64_t> source;   // winning source pixel index

  bool is_hole(std::size_t pixel) const noexcept { return hole[pixel] != 0; }
};

struct RenderOptions {
  double splat_radius = 1.0;  // pixels; a pixel is hit when its center lies in the disc
  std::size_t out_height = 0;  // 0 = source height
  std::size_t out_width = 0;   // 0 = source width
  unsigned threads = 1;
};

/// Projects every valid point of frame t through cam.extrinsics[t] and the
/// pinhole intrinsics (u = fx X/Z + cx is the column, v = fy Y/Z + cy the
/// row), skipping points with Z <= 0, and splats it as a disc. The nearest
/// depth wins; exact depth ties keep the lower source pixel index.
///
/// Throws ValidationError when the MoMap has no reference colors, and
/// ShapeError on a camera/frame count or segmentation size mismatch.
std::vector<PartialFrame> render(const MoMap& m, const SegMap& seg, const Camera& cam,
                                 const RenderOptions& opts = {});

/// Fraction of non-hole pixels per frame.
std::vector<double> coverage(const std::vector<PartialFrame>& frames);

/// Depth images store millimeters as 16-bit values; holes and depths beyond
/// the range are written as 0.
inline constexpr double kDepthUnitsPerMeter = 1000.0;

/// Writes frame_{t:04}.ppm (8-bit RGB), frame_{t:04}.pgm (16-bit big-endian
/// depth) and frame_{t:04}.seg (raw little-endian u32 ids) into `dir`.
void write_frames(const std::filesystem::path& dir, const std::vector<PartialFrame>& frames);

std::vector<std::byte> encode_ppm(const PartialFrame& f);
std::vector<std::byte> encode_depth_pgm(const PartialFrame& f);
std::vector<std::byte> encode_seg_raw(const PartialFrame& f);

}  // namespace momap
