#include "momap/synth.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <numbers>

#include "json_util.hpp"
#include "momap/error.hpp"

namespace momap {
namespace {

using detail::json;

std::vector<std::size_t> body_pixels(const RigidBodySpec& body, std::size_t height,
                                     std::size_t width, std::size_t index) {
  const std::string label = "body " + std::to_string(index);
  std::vector<std::size_t> out;
  if (!body.mask.empty()) {
    for (auto [r, c] : body.mask) {
      if (r >= height || c >= width) {
        throw ValidationError(label + ": mask pixel (" + std::to_string(r) + "," +
                              std::to_string(c) + ") outside the image");
      }
      out.push_back(r * width + c);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  const auto& rect = body.region;
  if (rect.height == 0 || rect.width == 0) {
    throw ValidationError(label + ": empty region");
  }
  if (rect.row + rect.height > height || rect.col + rect.width > width) {
    throw ValidationError(label + ": region exceeds the image bounds");
  }
  for (std::size_t r = rect.row; r < rect.row + rect.height; ++r) {
    for (std::size_t c = rect.col; c < rect.col + rect.width; ++c) {
      out.push_back(r * width + c);
    }
  }
  return out;
}

void check_motion(const BodyMotion& motion, const std::string& label) {
  if (const auto* lin = std::get_if<LinearMotion>(&motion)) {
    if (!lin->velocity.allFinite()) throw ValidationError(label + ": non-finite velocity");
  } else if (const auto* screw = std::get_if<ScrewMotion>(&motion)) {
    if (!screw->axis.allFinite() || !screw->origin.allFinite() ||
        !std::isfinite(screw->angular_velocity) || !std::isfinite(screw->pitch)) {
      throw ValidationError(label + ": non-finite screw parameters");
    }
    if (screw->axis.norm() == 0.0) throw ValidationError(label + ": zero screw axis");
  } else {
    const auto& way = std::get<WaypointMotion>(motion);
    if (way.frames.empty() || way.frames.size() != way.offsets.size()) {
      throw ValidationError(label + ": waypoints need matching non-empty frames/offsets");
    }
    for (std::size_t i = 0; i < way.frames.size(); ++i) {
      if (!std::isfinite(way.frames[i]) || !way.offsets[i].allFinite()) {
        throw ValidationError(label + ": non-finite waypoint");
      }
      if (i > 0 && !(way.frames[i] > way.frames[i - 1])) {
        throw ValidationError(label + ": waypoint frames must increase strictly");
      }
    }
  }
}

Vec3 waypoint_offset(const WaypointMotion& way, double t) {
  if (t <= way.frames.front()) return way.offsets.front();
  if (t >= way.frames.back()) return way.offsets.back();
  const auto it = std::upper_bound(way.frames.begin(), way.frames.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - way.frames.begin());
  const std::size_t lo = hi - 1;
  const double a = (t - way.frames[lo]) / (way.frames[hi] - way.frames[lo]);
  return (1.0 - a) * way.offsets[lo] + a * way.offsets[hi];
}

Vec3 jitter_color(SplitMix64& rng, const Vec3& base) {
  Vec3 c;
  for (int k = 0; k < 3; ++k) {
    c[k] = std::clamp(base[k] + rng.uniform(-0.05, 0.05), 0.0, 1.0);
  }
  return c;
}

}  // namespace

Vec3 body_position(const BodyMotion& motion, const Vec3& p0, std::size_t t,
                   double time_step) {
  const double seconds = static_cast<double>(t) * time_step;
  if (const auto* lin = std::get_if<LinearMotion>(&motion)) {
    return p0 + lin->velocity * seconds;
  }
  if (const auto* screw = std::get_if<ScrewMotion>(&motion)) {
    const Vec3 axis = screw->axis.normalized();
    const double angle = screw->angular_velocity * seconds;
    const Mat3 rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    return screw->origin + rot * (p0 - screw->origin) + axis * (screw->pitch * angle);
  }
  const auto& way = std::get<WaypointMotion>(motion);
  return p0 + waypoint_offset(way, static_cast<double>(t)) - waypoint_offset(way, 0.0);
}

Vec3 back_project(double fx, double fy, double cx, double cy, double row,
                  double col, double depth) {
  return {(col - cx) / fx * depth, (row - cy) / fy * depth, depth};
}

GeneratedScene generate(const SceneSpec& spec) {
  if (spec.height == 0 || spec.width == 0) throw ValidationError("empty image grid");
  if (spec.frames < 2) throw ValidationError("scene needs at least 2 frames");
  if (!(spec.time_step > 0.0) || !std::isfinite(spec.time_step)) {
    throw ValidationError("time_step must be finite and positive");
  }
  if (!(spec.fx > 0.0) || !(spec.fy > 0.0) || !std::isfinite(spec.fx) ||
      !std::isfinite(spec.fy) || !std::isfinite(spec.cx) || !std::isfinite(spec.cy)) {
    throw ValidationError("degenerate camera intrinsics");
  }
  if (!(spec.background_depth > 0.0) || !std::isfinite(spec.background_depth)) {
    throw ValidationError("background depth must be finite and positive");
  }

  const std::size_t n_pixels = spec.height * spec.width;
  std::vector<std::uint32_t> ids(n_pixels, SegMap::kBackground);
  for (std::size_t b = 0; b < spec.bodies.size(); ++b) {
    const auto& body = spec.bodies[b];
    const std::string label = "body " + std::to_string(b);
    if (!(body.depth > 0.0) || !(body.depth < spec.background_depth)) {
      throw ValidationError(label + ": depth must lie in (0, background_depth)");
    }
    check_motion(body.motion, label);
    const auto pixels = body_pixels(body, spec.height, spec.width, b);
    if (pixels.empty()) throw ValidationError(label + ": empty region");
    for (auto p : pixels) {
      if (ids[p] != SegMap::kBackground) {
        throw ValidationError(label + " overlaps body " + std::to_string(ids[p] - 1) +
                              " at pixel (" + std::to_string(p / spec.width) + "," +
                              std::to_string(p % spec.width) + ")");
      }
      ids[p] = static_cast<std::uint32_t>(b + 1);
    }
  }

  SplitMix64 rng(spec.seed);
  std::vector<Vec3> base_colors;
  const double gray = rng.uniform(0.15, 0.35);
  base_colors.emplace_back(gray, gray, gray);
  for (std::size_t b = 0; b < spec.bodies.size(); ++b) {
    base_colors.emplace_back(rng.uniform(0.3, 0.95), rng.uniform(0.3, 0.95),
                             rng.uniform(0.3, 0.95));
  }

  GeneratedScene out{MoMap(spec.height, spec.width, spec.frames, spec.time_step),
                     SegMap(spec.height, spec.width, ids),
                     Camera::with_identity_extrinsics(spec.fx, spec.fy, spec.cx,
                                                      spec.cy, spec.frames)};
  std::vector<double> colors(n_pixels * 3);
  std::vector<Vec3> traj(spec.frames);
  for (std::size_t p = 0; p < n_pixels; ++p) {
    const std::size_t row = p / spec.width;
    const std::size_t col = p % spec.width;
    const std::uint32_t id = ids[p];
    const double depth = id == SegMap::kBackground ? spec.background_depth
                                                   : spec.bodies[id - 1].depth;
    const Vec3 p0 = back_project(spec.fx, spec.fy, spec.cx, spec.cy,
                                 static_cast<double>(row), static_cast<double>(col), depth);
    for (std::size_t t = 0; t < spec.frames; ++t) {
      traj[t] = id == SegMap::kBackground
                    ? p0
                    : body_position(spec.bodies[id - 1].motion, p0, t, spec.time_step);
    }
    traj[0] = p0;
    out.momap.set_trajectory(p, traj);
    const Vec3 c = jitter_color(rng, base_colors[id]);
    for (int k = 0; k < 3; ++k) colors[3 * p + k] = c[k];
  }
  out.momap.set_colors(std::move(colors));
  return out;
}

MoMap occlude(const MoMap& m, const std::vector<OcclusionInterval>& intervals) {
  MoMap out = m;
  for (const auto& iv : intervals) {
    if (iv.pixel >= m.pixels()) {
      throw ValidationError("occlusion pixel " + std::to_string(iv.pixel) +
                            " outside the image");
    }
    if (iv.t_start == 0) {
      throw ValidationError("occlusion interval on pixel " + std::to_string(iv.pixel) +
                            " covers the reference frame");
    }
    if (iv.t_start > iv.t_end || iv.t_end >= m.frames()) {
      throw ValidationError("occlusion interval [" + std::to_string(iv.t_start) + "," +
                            std::to_string(iv.t_end) + "] is out of range");
    }
    for (std::size_t t = iv.t_start; t <= iv.t_end; ++t) {
      out.set_valid(iv.pixel, t, false);
      out.set_position(iv.pixel, t, Vec3::Zero());
    }
  }
  return out;
}

std::vector<OcclusionInterval> random_occlusion_intervals(
    const MoMap& m, double fraction, std::uint64_t seed,
    const std::vector<std::uint8_t>& pixel_mask) {
  if (!(fraction >= 0.0) || fraction > 1.0) {
    throw ValidationError("occlusion fraction must lie in [0, 1]");
  }
  if (!pixel_mask.empty() && pixel_mask.size() != m.pixels()) {
    throw ShapeError("occlusion pixel mask does not match the image size");
  }
  std::vector<OcclusionInterval> out;
  if (m.frames() < 2) return out;
  SplitMix64 rng(seed);
  const std::size_t hideable = m.frames() - 1;
  const auto target = static_cast<std::size_t>(std::llround(fraction * hideable));
  const std::size_t max_run = std::max<std::size_t>(1, hideable / 4);
  std::vector<std::uint8_t> hidden(m.frames());
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    if (!m.covered(p) || (!pixel_mask.empty() && !pixel_mask[p])) continue;
    std::fill(hidden.begin(), hidden.end(), 0);
    std::size_t count = 0;
    while (count < target) {
      const std::size_t start = 1 + rng.index(hideable);
      const std::size_t len = 1 + rng.index(max_run);
      for (std::size_t t = start; t < std::min(m.frames(), start + len) && count < target;
           ++t) {
        if (!hidden[t]) {
          hidden[t] = 1;
          ++count;
        }
      }
    }
    for (std::size_t t = 1; t < m.frames();) {
      if (!hidden[t]) {
        ++t;
        continue;
      }
      std::size_t end = t;
      while (end + 1 < m.frames() && hidden[end + 1]) ++end;
      out.push_back({p, t, end});
      t = end + 1;
    }
  }
  return out;
}

SceneSpec random_scene(std::uint64_t seed, std::size_t height, std::size_t width,
                       std::size_t frames, std::size_t max_bodies) {
  SplitMix64 rng(seed ^ 0x5eedULL);
  SceneSpec spec;
  spec.height = height;
  spec.width = width;
  spec.frames = frames;
  spec.time_step = kDefaultTimeStep;
  spec.background_depth = 5.0;
  spec.fx = spec.fy = static_cast<double>(std::max(height, width));
  spec.cx = (static_cast<double>(width) - 1.0) / 2.0;
  spec.cy = (static_cast<double>(height) - 1.0) / 2.0;
  spec.seed = seed;

  // One body per cell of a 2x2 layout keeps regions disjoint.
  const std::size_t min_bodies = max_bodies >= 2 ? 2 : 1;
  const std::size_t n_bodies =
      std::min<std::size_t>(4, min_bodies + rng.index(max_bodies - min_bodies + 1));
  const std::size_t cell_h = height / 2;
  const std::size_t cell_w = width / 2;
  if (cell_h < 4 || cell_w < 4) throw ValidationError("grid too small for a random scene");
  const double horizon = static_cast<double>(frames - 1) * spec.time_step;

  for (std::size_t b = 0; b < n_bodies; ++b) {
    RigidBodySpec body;
    const std::size_t h = 3 + rng.index(cell_h - 3);
    const std::size_t w = 3 + rng.index(cell_w - 3);
    body.region = {(b / 2) * cell_h + rng.index(cell_h - h + 1),
                   (b % 2) * cell_w + rng.index(cell_w - w + 1), h, w};
    body.depth = rng.uniform(1.5, 3.0);

    // Total displacement of 0.3-1.0 m over the clip, well above the default
    // moving threshold.
    const double travel = rng.uniform(0.3, 1.0);
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    dir.normalize();
    switch (rng.index(3)) {
      case 0:
        body.motion = LinearMotion{dir * (travel / horizon)};
        break;
      case 1: {
        const double row_c = body.region.row + (body.region.height - 1) / 2.0;
        const double col_c = body.region.col + (body.region.width - 1) / 2.0;
        ScrewMotion screw;
        screw.axis = dir;
        screw.origin = back_project(spec.fx, spec.fy, spec.cx, spec.cy, row_c, col_c,
                                    body.depth);
        screw.angular_velocity = rng.uniform(0.5, 1.5) * std::numbers::pi / horizon;
        screw.pitch = travel / (screw.angular_velocity * horizon);
        body.motion = screw;
        break;
      }
      default: {
        WaypointMotion way;
        const std::size_t keys = 3;
        for (std::size_t k = 0; k < keys; ++k) {
          way.frames.push_back(static_cast<double>(k * (frames - 1)) / (keys - 1));
          Vec3 offset = Vec3::Zero();
          if (k > 0) {
            offset = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized() * travel;
          }
          way.offsets.push_back(offset);
        }
        body.motion = way;
        break;
      }
    }
    spec.bodies.push_back(std::move(body));
  }
  return spec;
}

RigidTransform random_rigid(SplitMix64& rng, double translation_range) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  RigidTransform g;
  g.rotation = q.toRotationMatrix();
  g.translation = Vec3(rng.uniform(-translation_range, translation_range),
                       rng.uniform(-translation_range, translation_range),
                       rng.uniform(-translation_range, translation_range));
  return g;
}

SceneSpec scene_from_json(const nlohmann::json& j) {
  using namespace detail;
  require_object(j, "");
  reject_unknown_keys(j,
                      {"height", "width", "frames", "time_step", "background_depth",
                       "camera", "bodies", "seed"},
                      "");
  SceneSpec spec;
  spec.height = as_unsigned(require_field(j, "height", ""), "/height");
  spec.width = as_unsigned(require_field(j, "width", ""), "/width");
  spec.frames = as_unsigned(require_field(j, "frames", ""), "/frames");
  spec.time_step = number_or(j, "time_step", "", kDefaultTimeStep);
  spec.background_depth = number_or(j, "background_depth", "", spec.background_depth);
  spec.seed = unsigned_or(j, "seed", "", 0);

  spec.fx = spec.fy = static_cast<double>(std::max(spec.height, spec.width));
  spec.cx = (static_cast<double>(spec.width) - 1.0) / 2.0;
  spec.cy = (static_cast<double>(spec.height) - 1.0) / 2.0;
  if (auto it = j.find("camera"); it != j.end()) {
    const auto& cam = require_object(*it, "/camera");
    reject_unknown_keys(cam, {"fx", "fy", "cx", "cy"}, "/camera");
    spec.fx = number_or(cam, "fx", "/camera", spec.fx);
    spec.fy = number_or(cam, "fy", "/camera", spec.fy);
    spec.cx = number_or(cam, "cx", "/camera", spec.cx);
    spec.cy = number_or(cam, "cy", "/camera", spec.cy);
  }

  if (auto it = j.find("bodies"); it != j.end()) {
    if (!it->is_array()) json_fail("/bodies", "expected an array");
    for (std::size_t b = 0; b < it->size(); ++b) {
      const std::string path = "/bodies/" + std::to_string(b);
      const auto& jb = require_object((*it)[b], path);
      reject_unknown_keys(jb, {"region", "mask", "depth", "motion"}, path);
      RigidBodySpec body;
      body.depth = as_number(require_field(jb, "depth", path), path + "/depth");
      if (auto reg = jb.find("region"); reg != jb.end()) {
        const std::string rp = path + "/region";
        require_object(*reg, rp);
        reject_unknown_keys(*reg, {"row", "col", "height", "width"}, rp);
        body.region = {as_unsigned(require_field(*reg, "row", rp), rp + "/row"),
                       as_unsigned(require_field(*reg, "col", rp), rp + "/col"),
                       as_unsigned(require_field(*reg, "height", rp), rp + "/height"),
                       as_unsigned(require_field(*reg, "width", rp), rp + "/width")};
      }
      if (auto mask = jb.find("mask"); mask != jb.end()) {
        if (!mask->is_array()) json_fail(path + "/mask", "expected an array");
        for (std::size_t i = 0; i < mask->size(); ++i) {
          const std::string mp = path + "/mask/" + std::to_string(i);
          const auto& px = (*mask)[i];
          if (!px.is_array() || px.size() != 2) json_fail(mp, "expected [row, col]");
          body.mask.emplace_back(as_unsigned(px[0], mp + "/0"), as_unsigned(px[1], mp + "/1"));
        }
      }
      if (jb.find("region") == jb.end() && body.mask.empty()) {
        json_fail(path + "/region", "missing required field (or non-empty mask)");
      }

      const std::string mp = path + "/motion";
      const auto& jm = require_object(require_field(jb, "motion", path), mp);
      const std::string type = as_string(require_field(jm, "type", mp), mp + "/type");
      if (type == "linear") {
        reject_unknown_keys(jm, {"type", "velocity"}, mp);
        body.motion = LinearMotion{as_vec3(require_field(jm, "velocity", mp), mp + "/velocity")};
      } else if (type == "screw") {
        reject_unknown_keys(jm, {"type", "axis", "origin", "angular_velocity", "pitch"}, mp);
        ScrewMotion s;
        s.axis = as_vec3(require_field(jm, "axis", mp), mp + "/axis");
        if (auto o = jm.find("origin"); o != jm.end()) s.origin = as_vec3(*o, mp + "/origin");
        s.angular_velocity =
            as_number(require_field(jm, "angular_velocity", mp), mp + "/angular_velocity");
        s.pitch = number_or(jm, "pitch", mp, 0.0);
        body.motion = s;
      } else if (type == "waypoints") {
        reject_unknown_keys(jm, {"type", "frames", "offsets"}, mp);
        WaypointMotion w;
        const auto& jf = require_field(jm, "frames", mp);
        const auto& jo = require_field(jm, "offsets", mp);
        if (!jf.is_array()) json_fail(mp + "/frames", "expected an array");
        if (!jo.is_array()) json_fail(mp + "/offsets", "expected an array");
        for (std::size_t i = 0; i < jf.size(); ++i) {
          w.frames.push_back(as_number(jf[i], mp + "/frames/" + std::to_string(i)));
        }
        for (std::size_t i = 0; i < jo.size(); ++i) {
          w.offsets.push_back(as_vec3(jo[i], mp + "/offsets/" + std::to_string(i)));
        }
        body.motion = w;
      } else {
        json_fail(mp + "/type", "unknown motion type \"" + type + "\"");
      }
      spec.bodies.push_back(std::move(body));
    }
  }
  return spec;
}

nlohmann::json scene_to_json(const SceneSpec& spec) {
  using detail::vec3_json;
  json bodies = json::array();
  for (const auto& body : spec.bodies) {
    json jb;
    jb["depth"] = body.depth;
    if (body.mask.empty()) {
      jb["region"] = {{"row", body.region.row},
                      {"col", body.region.col},
                      {"height", body.region.height},
                      {"width", body.region.width}};
    } else {
      json mask = json::array();
      for (auto [r, c] : body.mask) mask.push_back({r, c});
      jb["mask"] = mask;
    }
    if (const auto* lin = std::get_if<LinearMotion>(&body.motion)) {
      jb["motion"] = {{"type", "linear"}, {"velocity", vec3_json(lin->velocity)}};
    } else if (const auto* s = std::get_if<ScrewMotion>(&body.motion)) {
      jb["motion"] = {{"type", "screw"},
                      {"axis", vec3_json(s->axis)},
                      {"origin", vec3_json(s->origin)},
                      {"angular_velocity", s->angular_velocity},
                      {"pitch", s->pitch}};
    } else {
      const auto& w = std::get<WaypointMotion>(body.motion);
      json offsets = json::array();
      for (const auto& o : w.offsets) offsets.push_back(vec3_json(o));
      jb["motion"] = {{"type", "waypoints"}, {"frames", w.frames}, {"offsets", offsets}};
    }
    bodies.push_back(std::move(jb));
  }
  return {{"height", spec.height},
          {"width", spec.width},
          {"frames", spec.frames},
          {"time_step", spec.time_step},
          {"background_depth", spec.background_depth},
          {"camera", {{"fx", spec.fx}, {"fy", spec.fy}, {"cx", spec.cx}, {"cy", spec.cy}}},
          {"bodies", bodies},
          {"seed", spec.seed}};
}

}  // namespace momap
