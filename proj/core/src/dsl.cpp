#include "momap/dsl.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json_util.hpp"
#include "momap/error.hpp"

namespace momap {
namespace {

constexpr const char* kAxisKeys[3] = {"x", "y", "z"};

Flag label(double d, double eps) {
  if (std::abs(d) <= eps) return Flag::kStay;
  return d > 0.0 ? Flag::kPos : Flag::kNeg;
}

}  // namespace

std::vector<std::pair<int, std::string>> DslVocabulary::flags() const {
  std::vector<std::pair<int, std::string>> out;
  for (int axis = 0; axis < 3; ++axis) {
    for (const auto& w : words[static_cast<std::size_t>(axis)]) out.emplace_back(axis, w);
  }
  return out;
}

MotionDsl emit_dsl(const MoMap& m, const SegMap& seg, double eps) {
  if (seg.height() != m.height() || seg.width() != m.width()) {
    throw ShapeError("segmentation does not match the MoMap dimensions");
  }
  if (!(eps >= 0.0)) throw ValidationError("stay band must be non-negative");
  const std::size_t last = m.frames() - 1;
  MotionDsl dsl;
  dsl.horizon = m.frames();
  const auto ids = seg.patch_ids();
  std::map<std::uint32_t, std::size_t> slot;
  for (std::size_t i = 0; i < ids.size(); ++i) slot[ids[i]] = i;
  std::vector<Vec3> start(ids.size(), Vec3::Zero());
  std::vector<Vec3> end(ids.size(), Vec3::Zero());
  std::vector<std::size_t> count(ids.size(), 0);
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    const auto id = seg.id(p);
    if (id == SegMap::kBackground || !m.valid(p, 0) || !m.valid(p, last)) continue;
    const std::size_t i = slot[id];
    start[i] += m.position(p, 0);
    end[i] += m.position(p, last);
    ++count[i];
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (count[i] == 0) {
      throw ValidationError("patch " + std::to_string(ids[i]) +
                            " has no pixel valid at the first and last frame");
    }
    const Vec3 d = (end[i] - start[i]) / static_cast<double>(count[i]);
    PatchMotion pm;
    pm.patch_id = ids[i];
    for (int k = 0; k < 3; ++k) pm.flags[static_cast<std::size_t>(k)] = label(d[k], eps);
    pm.magnitude = d.norm();
    dsl.patches.push_back(pm);
  }
  return dsl;
}

nlohmann::json serialize_dsl(const MotionDsl& dsl, const DslVocabulary& vocab) {
  nlohmann::json patches = nlohmann::json::array();
  for (const auto& pm : dsl.patches) {
    nlohmann::json jp = {{"id", pm.patch_id}};
    for (int k = 0; k < 3; ++k) jp[kAxisKeys[k]] = vocab.word(k, pm.flags[static_cast<std::size_t>(k)]);
    jp["magnitude"] = pm.magnitude;
    patches.push_back(std::move(jp));
  }
  return {{"horizon", dsl.horizon}, {"patches", patches}};
}

DslParseResult parse_dsl(const nlohmann::json& doc, const DslParseOptions& opts) {
  using namespace detail;
  DslParseResult out;
  auto unknown_keys = [&](const nlohmann::json& obj, const std::vector<std::string>& allowed,
                          const std::string& path) {
    if (opts.strict) {
      reject_unknown_keys(obj, allowed, path);
      return;
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
        out.warnings.push_back(path + "/" + it.key() + ": unknown field ignored");
      }
    }
  };

  require_object(doc, "");
  unknown_keys(doc, {"horizon", "patches"}, "");
  out.dsl.horizon = as_unsigned(require_field(doc, "horizon", ""), "/horizon");
  const auto& patches = require_field(doc, "patches", "");
  if (!patches.is_array()) json_fail("/patches", "expected an array");

  std::set<std::uint32_t> seen;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const std::string path = "/patches/" + std::to_string(i);
    const auto& jp = require_object(patches[i], path);
    unknown_keys(jp, {"id", "x", "y", "z", "magnitude"}, path);
    PatchMotion pm;
    const auto id = as_unsigned(require_field(jp, "id", path), path + "/id");
    if (id == SegMap::kBackground || id > 0xffffffffULL) {
      json_fail(path + "/id", "patch id must lie in [1, 2^32)");
    }
    pm.patch_id = static_cast<std::uint32_t>(id);
    if (!seen.insert(pm.patch_id).second) {
      json_fail(path + "/id", "duplicate patch id " + std::to_string(id));
    }
    for (int k = 0; k < 3; ++k) {
      const std::string kp = path + "/" + kAxisKeys[k];
      const auto word = as_string(require_field(jp, kAxisKeys[k], path), kp);
      const auto& choices = opts.vocabulary.words[static_cast<std::size_t>(k)];
      const auto it = std::find(choices.begin(), choices.end(), word);
      if (it == choices.end()) {
        json_fail(kp, "unknown label \"" + word + "\" (expected " + choices[0] + ", " +
                          choices[1] + " or " + choices[2] + ")");
      }
      pm.flags[static_cast<std::size_t>(k)] = static_cast<Flag>(it - choices.begin() - 1);
    }
    pm.magnitude = as_number(require_field(jp, "magnitude", path), path + "/magnitude");
    if (pm.magnitude < 0.0) json_fail(path + "/magnitude", "magnitude must be non-negative");
    out.dsl.patches.push_back(pm);
  }
  return out;
}

DslParseResult parse_dsl(const std::string& text, const DslParseOptions& opts) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  return parse_dsl(doc, opts);
}

std::vector<std::int8_t> ground_dsl(const MotionDsl& dsl, const SegMap& seg) {
  const auto ids = seg.patch_ids();
  std::map<std::uint32_t, const PatchMotion*> by_id;
  for (const auto& pm : dsl.patches) {
    if (!std::binary_search(ids.begin(), ids.end(), pm.patch_id)) {
      throw ValidationError("patch " + std::to_string(pm.patch_id) +
                            " is not present in the segmentation");
    }
    by_id[pm.patch_id] = &pm;
  }
  std::vector<std::int8_t> out(seg.pixels() * 3, 0);
  for (std::size_t p = 0; p < seg.pixels(); ++p) {
    const auto it = by_id.find(seg.id(p));
    if (it == by_id.end()) continue;
    for (std::size_t k = 0; k < 3; ++k) {
      out[3 * p + k] = static_cast<std::int8_t>(it->second->flags[k]);
    }
  }
  return out;
}

std::vector<PatchMotion> readback_flags(const std::vector<std::int8_t>& grounded,
                                        const SegMap& seg) {
  if (grounded.size() != seg.pixels() * 3) {
    throw ShapeError("grounded image does not match the segmentation");
  }
  const auto ids = seg.patch_ids();
  std::map<std::uint32_t, std::size_t> slot;
  for (std::size_t i = 0; i < ids.size(); ++i) slot[ids[i]] = i;
  // votes[patch][axis][label + 1]
  std::vector<std::array<std::array<std::size_t, 3>, 3>> votes(ids.size());
  for (std::size_t p = 0; p < seg.pixels(); ++p) {
    const auto id = seg.id(p);
    if (id == SegMap::kBackground) continue;
    for (std::size_t k = 0; k < 3; ++k) {
      const int v = grounded[3 * p + k];
      if (v < -1 || v > 1) throw ValidationError("grounded label outside {-1, 0, 1}");
      ++votes[slot[id]][k][static_cast<std::size_t>(v + 1)];
    }
  }
  std::vector<PatchMotion> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    PatchMotion pm;
    pm.patch_id = ids[i];
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& v = votes[i][k];
      // ties favor stay, then neg
      std::size_t best = 1;
      if (v[0] > v[best]) best = 0;
      if (v[2] > v[best]) best = 2;
      pm.flags[k] = static_cast<Flag>(static_cast<int>(best) - 1);
    }
    out.push_back(pm);
  }
  return out;
}

}  // namespace momap
