#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "momap/momap.hpp"

namespace momap {

/// Direction label on one axis.
enum class Flag : std::int8_t { kNeg = -1, kStay = 0, kPos = 1 };

/// Words for the three labels of each axis, indexed [axis][neg, stay, pos].
/// Axes are the reference camera's: x to the right, y down, z forward along
/// the optical axis.
struct DslVocabulary {
  std::array<std::array<std::string, 3>, 3> words{{
      {"left", "stay", "right"},
      {"up", "stay", "down"},
      {"forward", "stay", "backward"},
  }};

  const std::string& word(int axis, Flag f) const {
    return words[static_cast<std::size_t>(axis)][static_cast<std::size_t>(static_cast<int>(f) + 1)];
  }
  /// Every (axis, word) pair, nine in total.
  std::vector<std::pair<int, std::string>> flags() const;
};

struct PatchMotion {
  std::uint32_t patch_id = 0;
  std::array<Flag, 3> flags{Flag::kStay, Flag::kStay, Flag::kStay};
  double magnitude = 0.0;  // centroid displacement norm, meters

  friend bool operator==(const PatchMotion&, const PatchMotion&) = default;
};

struct MotionDsl {
  std::size_t horizon = 0;  // T; displacements run from frame 0 to T-1
  std::vector<PatchMotion> patches;

  friend bool operator==(const MotionDsl&, const MotionDsl&) = default;
};

/// Labels each patch by its centroid displacement between frame 0 and T-1,
/// computed over member pixels valid at both frames. |d_axis| <= eps is stay.
/// Throws ValidationError for a patch without such pixels.
MotionDsl emit_dsl(const MoMap& m, const SegMap& seg, double eps);

struct DslParseOptions {
  bool strict = true;  // unknown keys are errors; otherwise collected as warnings
  DslVocabulary vocabulary;
};

struct DslParseResult {
  MotionDsl dsl;
  std::vector<std::string> warnings;
};

/// Parses `{"horizon": T, "patches": [{"id", "x", "y", "z", "magnitude"}]}`.
/// Throws ParseError naming the JSON path for unknown labels, duplicate ids,
/// missing fields and (strict mode) unknown keys.
DslParseResult parse_dsl(const nlohmann::json& doc, const DslParseOptions& opts = {});
DslParseResult parse_dsl(const std::string& text, const DslParseOptions& opts = {});

nlohmann::json serialize_dsl(const MotionDsl& dsl, const DslVocabulary& vocab = {});

/// H*W*3 labels in {-1, 0, +1}, row-major pixel then axis; background and
/// patches missing from the program are zero. Throws ValidationError when the
/// program names a patch the segmentation lacks.
std::vector<std::int8_t> ground_dsl(const MotionDsl& dsl, const SegMap& seg);

/// Per-patch majority vote over a grounded image; patches in segmentation
/// order. Magnitudes are not recoverable and stay zero.
std::vector<PatchMotion> readback_flags(const std::vector<std::int8_t>& grounded,
                                        const SegMap& seg);

}  // namespace momap
