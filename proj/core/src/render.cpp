#include "momap/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "byte_io.hpp"
#include "momap/error.hpp"
#include "momap/io.hpp"
#include "momap/parallel.hpp"

namespace momap {
namespace {

PartialFrame empty_frame(std::size_t h, std::size_t w) {
  PartialFrame f;
  f.height = h;
  f.width = w;
  f.color.assign(h * w * 3, 0.0);
  f.seg.assign(h * w, PartialFrame::kHoleSeg);
  f.hole.assign(h * w, 1);
  f.depth.assign(h * w, std::numeric_limits<double>::infinity());
  f.source.assign(h * w, PartialFrame::kNoSource);
  return f;
}

PartialFrame render_frame(const MoMap& m, const SegMap& seg, const Camera& cam,
                          std::size_t t, std::size_t h, std::size_t w, double radius) {
  PartialFrame f = empty_frame(h, w);
  const auto& g = cam.extrinsics[t];
  const double r2 = radius * radius;
  const auto reach = static_cast<long long>(std::floor(radius));
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    if (!m.valid(p, t)) continue;
    const Vec3 x = g.apply(m.position(p, t));
    const double z = x.z();
    if (!(z > 0.0)) continue;
    const double u = cam.fx * x.x() / z + cam.cx;
    const double v = cam.fy * x.y() / z + cam.cy;
    if (!std::isfinite(u) || !std::isfinite(v)) continue;
    if (u < -radius - 1.0 || v < -radius - 1.0 || u > static_cast<double>(w) + radius ||
        v > static_cast<double>(h) + radius) {
      continue;
    }
    const long long col0 = std::llround(u);
    const long long row0 = std::llround(v);
    for (long long row = row0 - reach - 1; row <= row0 + reach + 1; ++row) {
      if (row < 0 || row >= static_cast<long long>(h)) continue;
      for (long long col = col0 - reach - 1; col <= col0 + reach + 1; ++col) {
        if (col < 0 || col >= static_cast<long long>(w)) continue;
        const double du = static_cast<double>(col) - u;
        const double dv = static_cast<double>(row) - v;
        if (du * du + dv * dv > r2) continue;
        const std::size_t q = static_cast<std::size_t>(row) * w + static_cast<std::size_t>(col);
        // Points are visited in increasing source index, so a strict test
        // leaves exact ties with the lower index.
        if (!(z < f.depth[q])) continue;
        f.depth[q] = z;
        f.hole[q] = 0;
        f.seg[q] = seg.id(p);
        f.source[q] = static_cast<std::int64_t>(p);
        for (int k = 0; k < 3; ++k) f.color[3 * q + k] = m.colors()[3 * p + k];
      }
    }
  }
  return f;
}

}  // namespace

std::vector<PartialFrame> render(const MoMap& m, const SegMap& seg, const Camera& cam,
                                 const RenderOptions& opts) {
  if (!m.has_colors()) throw ValidationError("render needs reference colors");
  if (cam.frames() != m.frames()) {
    throw ShapeError("camera has " + std::to_string(cam.frames()) + " frames, MoMap has " +
                     std::to_string(m.frames()));
  }
  if (seg.height() != m.height() || seg.width() != m.width()) {
    throw ShapeError("segmentation does not match the MoMap dimensions");
  }
  if (!(opts.splat_radius >= 0.0) || !std::isfinite(opts.splat_radius)) {
    throw ValidationError("splat radius must be finite and non-negative");
  }
  if (const auto v = validate_camera(cam, 1e-5); !v.empty()) throw ValidationError(v.front());
  const std::size_t h = opts.out_height ? opts.out_height : m.height();
  const std::size_t w = opts.out_width ? opts.out_width : m.width();
  std::vector<PartialFrame> frames(m.frames());
  parallel_for(m.frames(), opts.threads, [&](std::size_t t) {
    frames[t] = render_frame(m, seg, cam, t, h, w, opts.splat_radius);
  });
  return frames;
}

std::vector<double> coverage(const std::vector<PartialFrame>& frames) {
  std::vector<double> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    const std::size_t n = f.hole.size();
    const auto filled = static_cast<std::size_t>(std::count(f.hole.begin(), f.hole.end(), 0));
    out.push_back(n == 0 ? 0.0 : static_cast<double>(filled) / static_cast<double>(n));
  }
  return out;
}

std::vector<std::byte> encode_ppm(const PartialFrame& f) {
  detail::ByteWriter out;
  const std::string header =
      "P6\n" + std::to_string(f.width) + " " + std::to_string(f.height) + "\n255\n";
  out.bytes(header.data(), header.size());
  for (double c : f.color) {
    out.u8(static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0)));
  }
  return out.take();
}

std::vector<std::byte> encode_depth_pgm(const PartialFrame& f) {
  detail::ByteWriter out;
  const std::string header =
      "P5\n" + std::to_string(f.width) + " " + std::to_string(f.height) + "\n65535\n";
  out.bytes(header.data(), header.size());
  for (std::size_t i = 0; i < f.depth.size(); ++i) {
    std::uint16_t v = 0;
    if (!f.hole[i]) {
      const double units = std::round(f.depth[i] * kDepthUnitsPerMeter);
      v = units >= 1.0 && units <= 65535.0 ? static_cast<std::uint16_t>(units) : 0;
    }
    out.u8(static_cast<std::uint8_t>(v >> 8));  // PGM samples are big-endian
    out.u8(static_cast<std::uint8_t>(v & 0xff));
  }
  return out.take();
}

std::vector<std::byte> encode_seg_raw(const PartialFrame& f) {
  detail::ByteWriter out;
  for (auto id : f.seg) out.u32(id);
  return out.take();
}

void write_frames(const std::filesystem::path& dir, const std::vector<PartialFrame>& frames) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "frame_%04zu", t);
    write_file_bytes(dir / (std::string(stem) + ".ppm"), encode_ppm(frames[t]));
    write_file_bytes(dir / (std::string(stem) + ".pgm"), encode_depth_pgm(frames[t]));
    write_file_bytes(dir / (std::string(stem) + ".seg"), encode_seg_raw(frames[t]));
  }
}

}  // namespace momap
