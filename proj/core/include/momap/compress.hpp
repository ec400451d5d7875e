#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "momap/momap.hpp"

namespace momap {

/// Latent channel count used for 50-frame clips.
inline constexpr std::size_t kDefaultLatentChannels = 32;

/// Low-rank temporal code of a MoMap: each covered pixel's flattened
/// trajectory (T*3 values, frame-major then xyz) is approximated as
/// mean + coefficients * basis.
struct CompressedMoMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t frames = 0;
  std::size_t channels = 0;
  double time_step = kDefaultTimeStep;
  std::vector<double> mean;          // T*3
  std::vector<double> basis;         // channels x (T*3), row-major
  std::vector<double> coefficients;  // H*W x channels, row-major
  std::vector<std::uint8_t> valid_t0;  // H*W

  std::size_t row_length() const noexcept { return frames * 3; }

  friend bool operator==(const CompressedMoMap&, const CompressedMoMap&) = default;
};

/// Projects onto the top `channels` right singular vectors of the
/// mean-centered trajectory matrix of covered pixels. Each basis row is
/// sign-normalized so its largest-magnitude entry is positive (first such
/// entry on ties). When the centered matrix has fewer than `channels`
/// nonzero singular values the remaining rows complete an orthonormal basis.
///
/// Throws ValidationError if a covered pixel has an invalid entry or
/// channels is outside [1, T*3].
CompressedMoMap compress(const MoMap& m, std::size_t channels);

/// Throws ShapeError when frames*3 differs from the basis row length.
MoMap decompress(const CompressedMoMap& c, std::size_t frames);

/// Root-mean-square coordinate error of decompress(c) against m over covered
/// pixels. Throws ShapeError on mismatched dimensions or coverage.
double reconstruction_rmse(const MoMap& m, const CompressedMoMap& c);

struct CompressionStats {
  std::uint64_t raw_values = 0;          // H*W*T*3
  std::uint64_t coefficient_values = 0;  // H*W*channels
  std::uint64_t basis_values = 0;        // channels*T*3 + T*3 (basis + mean)
  double coefficient_ratio = 0.0;        // raw / coefficients
  double total_ratio = 0.0;              // raw / (coefficients + basis)
};

CompressionStats compression_stats(const CompressedMoMap& c);

/// .momapz layout, little-endian: magic "MOMZ", u32 version (1), u32 H, W,
/// T, channels, f64 seconds per frame (32-byte header); then a table of four
/// u32 tag + u64 length entries and the MEAN (T*3 f32), BASIS (C*T*3 f32),
/// COEF (H*W*C f32) and VALID (H*W bytes) payloads in that order.
namespace momapz_format {
inline constexpr char kMagic[4] = {'M', 'O', 'M', 'Z'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 32;
}  // namespace momapz_format

std::vector<std::byte> encode_compressed(const CompressedMoMap& c);
/// Throws FormatError.
CompressedMoMap decode_compressed(std::span<const std::byte> bytes);

std::uint64_t write_compressed(const std::filesystem::path& path, const CompressedMoMap& c);
CompressedMoMap read_compressed(const std::filesystem::path& path);

}  // namespace momap
