#include <cmath>
#include <cstring>
#include <limits>

#include "byte_io.hpp"
#include "momap/compress.hpp"
#include "momap/error.hpp"
#include "momap/io.hpp"

namespace momap {
namespace {

using detail::ByteReader;
using detail::ByteWriter;
using momap_format::fourcc;

constexpr std::uint32_t kTagMean = fourcc('M', 'E', 'A', 'N');
constexpr std::uint32_t kTagBasis = fourcc('B', 'A', 'S', 'I');
constexpr std::uint32_t kTagCoef = fourcc('C', 'O', 'E', 'F');
constexpr std::uint32_t kTagValid = fourcc('V', 'A', 'L', 'D');

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw FormatError(FormatErrc::kInvalidPayload, "dimensions overflow");
  }
  return a * b;
}

struct Plan {
  std::uint32_t tag;
  std::uint64_t length;
};

std::vector<Plan> plan_for(std::uint64_t h, std::uint64_t w, std::uint64_t t,
                           std::uint64_t ch) {
  const std::uint64_t row = mul(t, 3);
  return {{kTagMean, mul(row, 4)},
          {kTagBasis, mul(mul(ch, row), 4)},
          {kTagCoef, mul(mul(mul(h, w), ch), 4)},
          {kTagValid, mul(h, w)}};
}

}  // namespace

std::vector<std::byte> encode_compressed(const CompressedMoMap& c) {
  const std::size_t row = c.row_length();
  if (c.height == 0 || c.width == 0 || c.frames == 0 || c.channels == 0 ||
      c.mean.size() != row || c.basis.size() != c.channels * row ||
      c.coefficients.size() != c.height * c.width * c.channels ||
      c.valid_t0.size() != c.height * c.width) {
    throw ValidationError("compressed MoMap arrays do not match its dimensions");
  }
  ByteWriter out;
  out.bytes(momapz_format::kMagic, 4);
  out.u32(momapz_format::kVersion);
  out.u32(static_cast<std::uint32_t>(c.height));
  out.u32(static_cast<std::uint32_t>(c.width));
  out.u32(static_cast<std::uint32_t>(c.frames));
  out.u32(static_cast<std::uint32_t>(c.channels));
  out.f64(c.time_step);
  for (const auto& s : plan_for(c.height, c.width, c.frames, c.channels)) {
    out.u32(s.tag);
    out.u64(s.length);
  }
  for (double v : c.mean) out.f32(static_cast<float>(v));
  for (double v : c.basis) out.f32(static_cast<float>(v));
  for (double v : c.coefficients) out.f32(static_cast<float>(v));
  for (auto v : c.valid_t0) out.u8(v ? 1 : 0);
  return out.take();
}

CompressedMoMap decode_compressed(std::span<const std::byte> bytes) {
  ByteReader in(bytes);
  in.require(4, FormatErrc::kTruncatedHeader, "magic");
  char magic[4];
  in.copy(magic, 4);
  if (std::memcmp(magic, momapz_format::kMagic, 4) != 0) {
    throw FormatError(FormatErrc::kBadMagic,
                      "bad magic \"" + std::string(magic, 4) + "\", expected \"MOMZ\"");
  }
  in.require(4, FormatErrc::kTruncatedHeader, "version");
  const std::uint32_t version = in.u32();
  if (version != momapz_format::kVersion) {
    throw FormatError(FormatErrc::kUnsupportedVersion,
                      "unsupported version " + std::to_string(version));
  }
  in.require(momapz_format::kHeaderBytes - 8, FormatErrc::kTruncatedHeader, "header");
  CompressedMoMap c;
  c.height = in.u32();
  c.width = in.u32();
  c.frames = in.u32();
  c.channels = in.u32();
  c.time_step = in.f64();
  if (c.height == 0 || c.width == 0 || c.frames == 0 || c.channels == 0 ||
      c.channels > c.frames * 3) {
    throw FormatError(FormatErrc::kInvalidPayload, "invalid dimensions in header");
  }

  const auto plan = plan_for(c.height, c.width, c.frames, c.channels);
  in.require(plan.size() * 12, FormatErrc::kSectionLengthMismatch, "section table");
  std::uint64_t payload = 0;
  for (const auto& expect : plan) {
    const std::uint32_t tag = in.u32();
    const std::uint64_t length = in.u64();
    if (tag != expect.tag) {
      throw FormatError(FormatErrc::kInvalidPayload,
                        "unexpected section \"" + detail::tag_name(tag) + "\"");
    }
    if (length != expect.length) {
      throw FormatError(FormatErrc::kSectionLengthMismatch,
                        "section length mismatch in " + detail::tag_name(tag));
    }
    payload += length;
  }
  if (in.remaining() != payload) {
    throw FormatError(FormatErrc::kSectionLengthMismatch,
                      "section length mismatch: " + std::to_string(in.remaining()) +
                          " payload bytes present, sections declare " +
                          std::to_string(payload));
  }

  auto read_floats = [&](std::vector<double>& dst, std::size_t n, const char* name) {
    dst.resize(n);
    for (auto& v : dst) {
      v = in.f32();
      if (!std::isfinite(v)) {
        throw FormatError(FormatErrc::kNonFinitePayload,
                          std::string("non-finite value in ") + name);
      }
    }
  };
  read_floats(c.mean, c.row_length(), "MEAN");
  read_floats(c.basis, c.channels * c.row_length(), "BASIS");
  read_floats(c.coefficients, c.height * c.width * c.channels, "COEF");
  c.valid_t0.resize(c.height * c.width);
  for (auto& v : c.valid_t0) {
    v = in.u8();
    if (v > 1) throw FormatError(FormatErrc::kInvalidPayload, "validity byte is not 0/1");
  }
  return c;
}

std::uint64_t write_compressed(const std::filesystem::path& path, const CompressedMoMap& c) {
  const auto bytes = encode_compressed(c);
  write_file_bytes(path, bytes);
  return bytes.size();
}

CompressedMoMap read_compressed(const std::filesystem::path& path) {
  return decode_compressed(read_file_bytes(path));
}

}  // namespace momap
