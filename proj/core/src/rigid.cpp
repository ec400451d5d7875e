#include "momap/error.hpp"
#include "momap/momap.hpp"

namespace momap {

MoMap apply_rigid(const MoMap& m, const RigidTransform& g) {
  if (auto v = rotation_violation(g.rotation)) throw ValidationError(*v);
  if (!g.translation.allFinite()) {
    throw ValidationError("translation has non-finite entries");
  }
  MoMap out = m;
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    for (std::size_t t = 0; t < m.frames(); ++t) {
      if (m.valid(p, t)) out.set_position(p, t, g.apply(m.position(p, t)));
    }
  }
  return out;
}

}  // namespace momap
