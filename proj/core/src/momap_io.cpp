#include "momap/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "byte_io.hpp"
#include "momap/error.hpp"

namespace momap {
namespace {

using detail::ByteReader;
using detail::ByteWriter;
using detail::SectionEntry;
namespace fmt = momap_format;

// f32-stored rotations are orthonormal only to single precision.
constexpr double kStoredRotationTolerance = 1e-5;

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw FormatError(FormatErrc::kInvalidPayload, "dimensions overflow");
  }
  return a * b;
}

struct ExpectedSizes {
  std::uint64_t valid, pos, seg, cam, color;
};

ExpectedSizes expected_sizes(std::uint64_t h, std::uint64_t w, std::uint64_t t) {
  const std::uint64_t hw = checked_mul(h, w);
  const std::uint64_t hwt = checked_mul(hw, t);
  return {hwt, checked_mul(hwt, 12), checked_mul(hw, 4),
          checked_mul(checked_mul(t, 12) + 4, 4), checked_mul(hw, 12)};
}

std::vector<SectionEntry> section_plan(std::uint32_t flags, const ExpectedSizes& s) {
  std::vector<SectionEntry> plan{{fmt::kTagValid, s.valid}, {fmt::kTagPos, s.pos}};
  if (flags & fmt::kFlagSeg) plan.push_back({fmt::kTagSeg, s.seg});
  if (flags & fmt::kFlagCamera) plan.push_back({fmt::kTagCam, s.cam});
  if (flags & fmt::kFlagColors) plan.push_back({fmt::kTagColor, s.color});
  return plan;
}

void throw_if_violations(const std::vector<std::string>& v, const char* what) {
  if (v.empty()) return;
  std::string msg = std::string(what) + ": " + v.front();
  for (std::size_t i = 1; i < v.size(); ++i) msg += "; " + v[i];
  throw ValidationError(msg);
}

}  // namespace

std::vector<std::byte> encode_momap(const MoMap& m, const std::optional<SegMap>& seg,
                                    const std::optional<Camera>& cam) {
  throw_if_violations(validate_momap(m), "invalid MoMap");
  if (seg) throw_if_violations(validate_segmap(*seg, m.height(), m.width()),
                               "invalid segmentation");
  if (cam) {
    throw_if_violations(validate_camera(*cam, kStoredRotationTolerance),
                        "invalid camera");
    if (cam->frames() != m.frames()) {
      throw ValidationError("camera has " + std::to_string(cam->frames()) +
                            " frames, MoMap has " + std::to_string(m.frames()));
    }
  }

  std::uint32_t flags = 0;
  if (seg) flags |= fmt::kFlagSeg;
  if (cam) flags |= fmt::kFlagCamera;
  if (m.has_colors()) flags |= fmt::kFlagColors;

  ByteWriter out;
  out.bytes(fmt::kMagic, 4);
  out.u32(fmt::kVersion);
  out.u32(static_cast<std::uint32_t>(m.height()));
  out.u32(static_cast<std::uint32_t>(m.width()));
  out.u32(static_cast<std::uint32_t>(m.frames()));
  out.u32(flags);
  out.f64(m.time_step());

  const auto plan = section_plan(flags, expected_sizes(m.height(), m.width(), m.frames()));
  for (const auto& s : plan) {
    out.u32(s.tag);
    out.u64(s.length);
  }

  for (auto v : m.valid_mask()) out.u8(v);
  for (double x : m.positions()) out.f32(static_cast<float>(x));
  if (seg) {
    for (auto id : seg->ids()) out.u32(id);
  }
  if (cam) {
    out.f32(static_cast<float>(cam->fx));
    out.f32(static_cast<float>(cam->fy));
    out.f32(static_cast<float>(cam->cx));
    out.f32(static_cast<float>(cam->cy));
    for (const auto& g : cam->extrinsics) {
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) out.f32(static_cast<float>(g.rotation(r, c)));
      }
      for (int r = 0; r < 3; ++r) out.f32(static_cast<float>(g.translation(r)));
    }
  }
  if (m.has_colors()) {
    for (double c : m.colors()) out.f32(static_cast<float>(c));
  }
  return out.take();
}

MoMapBundle decode_momap(std::span<const std::byte> bytes) {
  ByteReader in(bytes);
  in.require(4, FormatErrc::kTruncatedHeader, "magic");
  char magic[4];
  in.copy(magic, 4);
  if (std::memcmp(magic, fmt::kMagic, 4) != 0) {
    throw FormatError(FormatErrc::kBadMagic,
                      "bad magic \"" + std::string(magic, 4) + "\", expected \"MOMP\"");
  }
  in.require(4, FormatErrc::kTruncatedHeader, "version");
  const std::uint32_t version = in.u32();
  if (version != fmt::kVersion) {
    throw FormatError(FormatErrc::kUnsupportedVersion,
                      "unsupported version " + std::to_string(version));
  }
  in.require(fmt::kHeaderBytes - 8, FormatErrc::kTruncatedHeader, "header");
  const std::uint32_t h = in.u32();
  const std::uint32_t w = in.u32();
  const std::uint32_t t = in.u32();
  const std::uint32_t flags = in.u32();
  const double time_step = in.f64();
  if (h == 0 || w == 0 || t == 0) {
    throw FormatError(FormatErrc::kInvalidPayload, "zero dimension in header");
  }
  if (flags & ~(fmt::kFlagSeg | fmt::kFlagCamera | fmt::kFlagColors)) {
    throw FormatError(FormatErrc::kInvalidPayload,
                      "unknown flag bits " + std::to_string(flags));
  }

  const auto plan = section_plan(flags, expected_sizes(h, w, t));
  in.require(plan.size() * fmt::kSectionEntryBytes,
             FormatErrc::kSectionLengthMismatch, "section table");
  std::uint64_t payload = 0;
  for (const auto& expect : plan) {
    const std::uint32_t tag = in.u32();
    const std::uint64_t length = in.u64();
    if (tag != expect.tag) {
      throw FormatError(FormatErrc::kInvalidPayload,
                        "unexpected section \"" + detail::tag_name(tag) +
                            "\", expected \"" + detail::tag_name(expect.tag) + "\"");
    }
    if (length != expect.length) {
      throw FormatError(FormatErrc::kSectionLengthMismatch,
                        "section length mismatch in " + detail::tag_name(tag) +
                            ": header says " + std::to_string(length) +
                            ", dimensions imply " + std::to_string(expect.length));
    }
    payload += length;
  }
  if (in.remaining() != payload) {
    throw FormatError(FormatErrc::kSectionLengthMismatch,
                      "section length mismatch: " + std::to_string(in.remaining()) +
                          " payload bytes present, sections declare " +
                          std::to_string(payload));
  }

  MoMapBundle out;
  MoMap& m = out.momap;
  m = MoMap(h, w, t, time_step);
  auto valid = m.valid_mask();
  for (auto& v : valid) {
    v = in.u8();
    if (v > 1) {
      throw FormatError(FormatErrc::kInvalidPayload, "validity byte is not 0/1");
    }
  }
  auto pos = m.positions();
  for (auto& x : pos) x = static_cast<double>(in.f32());
  for (std::size_t e = 0; e < valid.size(); ++e) {
    if (!valid[e]) continue;
    if (!std::isfinite(pos[3 * e]) || !std::isfinite(pos[3 * e + 1]) ||
        !std::isfinite(pos[3 * e + 2])) {
      const std::size_t pixel = e / t;
      throw FormatError(FormatErrc::kNonFinitePayload,
                        "non-finite position at valid entry (" +
                            std::to_string(pixel / w) + "," +
                            std::to_string(pixel % w) + "," +
                            std::to_string(e % t) + ")");
    }
  }

  if (flags & fmt::kFlagSeg) {
    std::vector<std::uint32_t> ids(static_cast<std::size_t>(h) * w);
    for (auto& id : ids) id = in.u32();
    out.seg = SegMap(h, w, std::move(ids));
  }
  if (flags & fmt::kFlagCamera) {
    Camera cam;
    cam.fx = in.f32();
    cam.fy = in.f32();
    cam.cx = in.f32();
    cam.cy = in.f32();
    cam.extrinsics.resize(t);
    for (auto& g : cam.extrinsics) {
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) g.rotation(r, c) = in.f32();
      }
      for (int r = 0; r < 3; ++r) g.translation(r) = in.f32();
    }
    out.camera = std::move(cam);
  }
  if (flags & fmt::kFlagColors) {
    std::vector<double> colors(static_cast<std::size_t>(h) * w * 3);
    for (auto& c : colors) c = in.f32();
    m.set_colors(std::move(colors));
  }

  auto check = [](const std::vector<std::string>& v) {
    if (!v.empty()) throw FormatError(FormatErrc::kInvalidPayload, v.front());
  };
  check(validate_momap(m));
  if (out.seg) check(validate_segmap(*out.seg, h, w));
  if (out.camera) check(validate_camera(*out.camera, kStoredRotationTolerance));
  return out;
}

nlohmann::json momap_sidecar(const MoMap& m, bool has_seg, bool has_camera) {
  std::uint32_t flags = 0;
  if (has_seg) flags |= fmt::kFlagSeg;
  if (has_camera) flags |= fmt::kFlagCamera;
  if (m.has_colors()) flags |= fmt::kFlagColors;
  return {
      {"format", "momap"},
      {"magic", "MOMP"},
      {"version", fmt::kVersion},
      {"height", m.height()},
      {"width", m.width()},
      {"frames", m.frames()},
      {"flags", flags},
      {"has_seg", has_seg},
      {"has_camera", has_camera},
      {"has_colors", m.has_colors()},
      {"time_step", m.time_step()},
  };
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto side = path;
  side.replace_extension(".json");
  return side;
}

std::uint64_t write_momap(const std::filesystem::path& path, const MoMap& m,
                          const std::optional<SegMap>& seg,
                          const std::optional<Camera>& cam) {
  const auto bytes = encode_momap(m, seg, cam);
  write_file_bytes(path, bytes);
  write_text_file(sidecar_path(path),
                  momap_sidecar(m, seg.has_value(), cam.has_value()).dump(2) + "\n");
  return bytes.size();
}

MoMapBundle read_momap(const std::filesystem::path& path) {
  return decode_momap(read_file_bytes(path));
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()),
                           static_cast<std::streamsize>(size))) {
    throw IoError("failed reading " + path.string());
  }
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

}  // namespace momap
