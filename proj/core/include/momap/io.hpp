#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "momap/momap.hpp"

namespace momap {

/// Layout of the .momap container (all integers little-endian):
///
///   offset  size  field
///   0       4     magic "MOMP"
///   4       4     u32 version (1)
///   8       12    u32 height, width, frames
///   20      4     u32 flags: bit0 seg, bit1 camera, bit2 colors
///   24      8     f64 seconds per frame
///   32      12*n  section table: u32 tag + u64 byte length per section
///   ...           section payloads in table order
///
/// Sections appear in the order VALID, POS, SEG, CAM, COLOR; the last three
/// only when flagged. VALID holds H*W*T bytes (0/1), POS H*W*T*3 f32, SEG
/// H*W u32, CAM f32 fx,fy,cx,cy then T rows of R (row-major) followed by t,
/// COLOR H*W*3 f32. Positions and camera values are rounded to f32 on write.
namespace momap_format {
inline constexpr char kMagic[4] = {'M', 'O', 'M', 'P'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 32;
inline constexpr std::size_t kSectionEntryBytes = 12;

inline constexpr std::uint32_t kFlagSeg = 1u << 0;
inline constexpr std::uint32_t kFlagCamera = 1u << 1;
inline constexpr std::uint32_t kFlagColors = 1u << 2;

/// Section tags are the ASCII fourcc read as a little-endian u32.
inline constexpr std::uint32_t fourcc(char a, char b, char c, char d) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(a)) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b)) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(c)) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(d)) << 24;
}
inline constexpr std::uint32_t kTagValid = fourcc('V', 'A', 'L', 'D');
inline constexpr std::uint32_t kTagPos = fourcc('P', 'O', 'S', ' ');
inline constexpr std::uint32_t kTagSeg = fourcc('S', 'E', 'G', ' ');
inline constexpr std::uint32_t kTagCam = fourcc('C', 'A', 'M', ' ');
inline constexpr std::uint32_t kTagColor = fourcc('C', 'O', 'L', 'R');
}  // namespace momap_format

/// Contents of one .momap file.
struct MoMapBundle {
  MoMap momap;
  std::optional<SegMap> seg;
  std::optional<Camera> camera;

  friend bool operator==(const MoMapBundle&, const MoMapBundle&) = default;
};

/// Serializes to the .momap byte layout. Throws ValidationError if the MoMap,
/// segmentation or camera is invalid or mis-sized.
std::vector<std::byte> encode_momap(const MoMap& m,
                                    const std::optional<SegMap>& seg = std::nullopt,
                                    const std::optional<Camera>& cam = std::nullopt);

/// Inverse of encode_momap. Throws FormatError.
MoMapBundle decode_momap(std::span<const std::byte> bytes);

/// Writes `path` and a JSON sidecar next to it (same stem, .json).
/// Returns the number of bytes written to `path`.
std::uint64_t write_momap(const std::filesystem::path& path, const MoMap& m,
                          const std::optional<SegMap>& seg = std::nullopt,
                          const std::optional<Camera>& cam = std::nullopt);

MoMapBundle read_momap(const std::filesystem::path& path);

/// Header fields mirrored into the sidecar.
nlohmann::json momap_sidecar(const MoMap& m, bool has_seg, bool has_camera);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Whole-file helpers shared by the binary formats. Throw IoError.
std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::byte> bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace momap
