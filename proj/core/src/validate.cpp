#include <Eigen/LU>

#include <cmath>
#include <sstream>

#include "momap/momap.hpp"

namespace momap {
namespace {

std::string entry_label(const MoMap& m, std::size_t pixel, std::size_t t) {
  std::ostringstream os;
  os << "(" << pixel / m.width() << "," << pixel % m.width() << "," << t << ")";
  return os.str();
}

}  // namespace

std::vector<std::string> validate_momap(const MoMap& m) {
  std::vector<std::string> out;
  if (m.height() == 0 || m.width() == 0 || m.frames() == 0) {
    out.push_back("dimensions must be >= 1 (got " + std::to_string(m.height()) +
                  "x" + std::to_string(m.width()) + "x" +
                  std::to_string(m.frames()) + ")");
    return out;
  }
  if (!(m.time_step() > 0.0) || !std::isfinite(m.time_step())) {
    out.push_back("time_step must be finite and positive");
  }

  bool reported_nonfinite = false;
  bool reported_anchor = false;
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    const bool anchored = m.valid(p, 0);
    for (std::size_t t = 0; t < m.frames(); ++t) {
      if (!m.valid(p, t)) continue;
      if (!reported_nonfinite && !m.position(p, t).allFinite()) {
        out.push_back("non-finite position at valid entry " + entry_label(m, p, t));
        reported_nonfinite = true;
      }
      if (!reported_anchor && !anchored) {
        out.push_back("anchor rule: valid entry " + entry_label(m, p, t) +
                      " on a pixel whose reference frame is invalid");
        reported_anchor = true;
      }
    }
  }

  if (m.has_colors()) {
    const auto colors = m.colors();
    for (std::size_t i = 0; i < colors.size(); ++i) {
      if (!std::isfinite(colors[i]) || colors[i] < 0.0 || colors[i] > 1.0) {
        out.push_back("reference color outside [0,1] at " +
                      entry_label(m, i / 3, 0));
        break;
      }
    }
  }
  return out;
}

std::vector<std::string> validate_segmap(const SegMap& seg, std::size_t height,
                                         std::size_t width) {
  std::vector<std::string> out;
  if (seg.height() != height || seg.width() != width) {
    out.push_back("segmentation is " + std::to_string(seg.height()) + "x" +
                  std::to_string(seg.width()) + ", expected " +
                  std::to_string(height) + "x" + std::to_string(width));
    return out;
  }
  const auto ids = seg.patch_ids();
  if (!ids.empty() && ids.back() != ids.size()) {
    for (std::uint32_t expect = 1; expect <= ids.back(); ++expect) {
      if (ids[expect - 1] != expect) {
        out.push_back("patch ids are not dense: id " + std::to_string(expect) +
                      " labels no pixel");
        break;
      }
    }
  }
  return out;
}

std::optional<std::string> rotation_violation(const Mat3& r, double tol) {
  if (!r.allFinite()) return "rotation has non-finite entries";
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tol) {
    std::ostringstream os;
    os << "rotation is not orthonormal (max |R^T R - I| = " << ortho << ")";
    return os.str();
  }
  const double det = r.determinant();
  if (std::abs(det - 1.0) > tol) {
    std::ostringstream os;
    os << "rotation determinant is " << det << ", expected +1";
    return os.str();
  }
  return std::nullopt;
}

std::vector<std::string> validate_camera(const Camera& cam, double rotation_tol) {
  std::vector<std::string> out;
  if (!(cam.fx > 0.0) || !(cam.fy > 0.0) || !std::isfinite(cam.fx) ||
      !std::isfinite(cam.fy)) {
    out.push_back("focal lengths must be finite and positive");
  }
  if (!std::isfinite(cam.cx) || !std::isfinite(cam.cy)) {
    out.push_back("principal point must be finite");
  }
  for (std::size_t t = 0; t < cam.extrinsics.size(); ++t) {
    const auto& g = cam.extrinsics[t];
    if (auto v = rotation_violation(g.rotation, rotation_tol)) {
      out.push_back("extrinsics[" + std::to_string(t) + "]: " + *v);
      break;
    }
    if (!g.translation.allFinite()) {
      out.push_back("extrinsics[" + std::to_string(t) + "]: non-finite translation");
      break;
    }
  }
  return out;
}

}  // namespace momap
