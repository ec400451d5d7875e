#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

namespace momap::fixture {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("momap_" + tag + "_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

MoMap random_momap(SplitMix64& rng, std::size_t h, std::size_t w, std::size_t t,
                   double coverage, double validity) {
  MoMap m(h, w, t);
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    if (rng.uniform() >= coverage) continue;
    for (std::size_t f = 0; f < t; ++f) {
      if (f > 0 && rng.uniform() >= validity) continue;
      m.set_position(p, f, {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.5, 4)});
      m.set_valid(p, f, true);
    }
  }
  return m;
}

void add_random_colors(SplitMix64& rng, MoMap& m) {
  std::vector<double> c(m.pixels() * 3);
  for (auto& v : c) v = rng.uniform();
  m.set_colors(std::move(c));
}

SegMap random_segmap(SplitMix64& rng, std::size_t h, std::size_t w, std::uint32_t patches) {
  SegMap seg(h, w);
  // Seed each id once so ids stay dense, then fill the rest at random.
  for (std::uint32_t id = 1; id <= patches && id < h * w; ++id) seg.set_id(id, id);
  for (std::size_t p = patches + 1; p < h * w; ++p) {
    seg.set_id(p, static_cast<std::uint32_t>(rng.index(patches + 1)));
  }
  return seg;
}

Camera random_camera(SplitMix64& rng, std::size_t frames) {
  Camera cam;
  cam.fx = rng.uniform(10, 100);
  cam.fy = rng.uniform(10, 100);
  cam.cx = rng.uniform(0, 32);
  cam.cy = rng.uniform(0, 32);
  for (std::size_t t = 0; t < frames; ++t) cam.extrinsics.push_back(random_rigid(rng, 1.0));
  return cam;
}

MoMap from_trajectories(const std::vector<std::vector<Vec3>>& trajs) {
  MoMap m(1, trajs.size(), trajs.front().size(), 1.0);
  for (std::size_t p = 0; p < trajs.size(); ++p) m.set_trajectory(p, trajs[p]);
  return m;
}

std::vector<Vec3> trajectory(const MoMap& m, std::size_t pixel) {
  std::vector<Vec3> out(m.frames());
  for (std::size_t t = 0; t < m.frames(); ++t) out[t] = m.position(pixel, t);
  return out;
}

std::vector<Vec3> random_walk(SplitMix64& rng, std::size_t t, double step) {
  std::vector<Vec3> out;
  Vec3 x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(1, 3));
  for (std::size_t i = 0; i < t; ++i) {
    out.push_back(x);
    x += step * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  }
  return out;
}

SceneSpec small_rigid_body_scene(std::size_t h, std::size_t w, std::size_t t) {
  SceneSpec spec;
  spec.height = h;
  spec.width = w;
  spec.frames = t;
  spec.time_step = 1.0;
  spec.fx = spec.fy = 32.0;
  spec.cx = static_cast<double>(w - 1) / 2.0;
  spec.cy = static_cast<double>(h - 1) / 2.0;
  spec.background_depth = 3.0;
  RigidBodySpec body;
  body.region = {h / 2 - 4, w / 2 - 4, 9, 9};
  body.depth = 0.8;  // 8 pixel gaps * 0.8 / 32 = 0.2 m across
  body.motion = LinearMotion{Vec3(0.1, 0.0, 0.0)};
  spec.bodies.push_back(body);
  spec.seed = 11;
  return spec;
}

}  // namespace momap::fixture

namespace momap::fixture {

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void round_to_f32(MoMap& m) {
  for (auto& v : m.positions()) v = f32(v);
  for (auto& v : m.colors()) v = f32(v);
}

void round_to_f32(Camera& cam) {
  cam.fx = f32(cam.fx);
  cam.fy = f32(cam.fy);
  cam.cx = f32(cam.cx);
  cam.cy = f32(cam.cy);
  for (auto& g : cam.extrinsics) {
    g.rotation = g.rotation.unaryExpr([](double v) { return f32(v); });
    g.translation = g.translation.unaryExpr([](double v) { return f32(v); });
  }
}

MoMapBundle random_bundle(SplitMix64& rng) {
  const std::size_t h = 1 + rng.index(6);
  const std::size_t w = 1 + rng.index(6);
  const std::size_t t = 1 + rng.index(7);
  MoMapBundle b{random_momap(rng, h, w, t, 0.8, 0.7), std::nullopt, std::nullopt};
  b.momap.set_time_step(rng.uniform(0.01, 2.0));
  if (rng.uniform() < 0.5) add_random_colors(rng, b.momap);
  round_to_f32(b.momap);
  if (rng.uniform() < 0.5) {
    b.seg = random_segmap(rng, h, w, static_cast<std::uint32_t>(rng.index(std::min<std::size_t>(h * w, 5))));
  }
  if (rng.uniform() < 0.5) {
    b.camera = random_camera(rng, t);
    round_to_f32(*b.camera);
  }
  return b;
}

CompressedMoMap random_compressed(SplitMix64& rng) {
  CompressedMoMap c;
  c.height = 1 + rng.index(5);
  c.width = 1 + rng.index(5);
  c.frames = 1 + rng.index(6);
  c.channels = 1 + rng.index(c.frames * 3);
  c.time_step = rng.uniform(0.01, 1.0);
  const std::size_t d = c.frames * 3;
  for (std::size_t i = 0; i < d; ++i) c.mean.push_back(f32(rng.uniform(-3, 3)));
  for (std::size_t i = 0; i < c.channels * d; ++i) c.basis.push_back(f32(rng.uniform(-1, 1)));
  for (std::size_t i = 0; i < c.height * c.width; ++i) c.valid_t0.push_back(rng.uniform() < 0.8);
  for (std::size_t i = 0; i < c.height * c.width * c.channels; ++i) {
    c.coefficients.push_back(c.valid_t0[i / c.channels] ? f32(rng.uniform(-5, 5)) : 0.0);
  }
  return c;
}

}  // namespace momap::fixture
