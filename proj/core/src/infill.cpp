#include "momap/infill.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"
#include "knn.hpp"
#include "momap/error.hpp"
#include "momap/parallel.hpp"

namespace momap {
namespace {

// Incident edges of every pixel in a fixed order so gradient accumulation
// does not depend on scheduling.
struct Incidence {
  std::vector<std::size_t> offsets;  // pixels + 1
  std::vector<std::size_t> edge;     // edge index
};

Incidence build_incidence(std::size_t pixels, const EdgeList& edges) {
  Incidence inc;
  inc.offsets.assign(pixels + 1, 0);
  for (const auto& [a, b] : edges) {
    ++inc.offsets[a + 1];
    ++inc.offsets[b + 1];
  }
  for (std::size_t p = 0; p < pixels; ++p) inc.offsets[p + 1] += inc.offsets[p];
  inc.edge.resize(inc.offsets.back());
  std::vector<std::size_t> fill(inc.offsets.begin(), inc.offsets.end() - 1);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [a, b] = edges[e];
    inc.edge[fill[a]++] = e;
    inc.edge[fill[b]++] = e;
  }
  return inc;
}

struct Objective {
  const EdgeList& edges;
  Incidence incidence;
  std::vector<double> rest;  // per edge
  std::vector<std::uint8_t> covered;
  const InfillConfig& cfg;

  Objective(const MoMap& m, const EdgeList& e, const InfillConfig& c)
      : edges(e), incidence(build_incidence(m.pixels(), e)), cfg(c) {
    rest.reserve(edges.size());
    for (const auto& [a, b] : edges) rest.push_back((m.position(a, 0) - m.position(b, 0)).norm());
    covered.resize(m.pixels());
    for (std::size_t p = 0; p < m.pixels(); ++p) covered[p] = m.covered(p) ? 1 : 0;
  }

  // Energy with an optional gradient over all coordinates.
  double evaluate(const MoMap& m, std::vector<double>* grad) const {
    const std::size_t T = m.frames();
    const std::size_t P = m.pixels();
    const auto x = m.positions();
    std::vector<double> pixel_energy(P, 0.0);
    std::vector<double> edge_energy(edges.size(), 0.0);

    // Rigidity residual scale per (edge, t): 2 w r / |d|, reused by the
    // gradient gather below.
    std::vector<double> edge_scale;
    if (grad) edge_scale.assign(edges.size() * T, 0.0);

    if (cfg.w_arap > 0.0) {
      parallel_for(edges.size(), cfg.threads, [&](std::size_t e) {
        const auto [a, b] = edges[e];
        double acc = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
          const double* pa = &x[3 * (a * T + t)];
          const double* pb = &x[3 * (b * T + t)];
          const double dx = pa[0] - pb[0], dy = pa[1] - pb[1], dz = pa[2] - pb[2];
          const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
          const double r = len - rest[e];
          acc += r * r;
          if (grad && len > 0.0) edge_scale[e * T + t] = 2.0 * cfg.w_arap * r / len;
        }
        edge_energy[e] = cfg.w_arap * acc;
      });
    }

    if (grad) grad->assign(x.size(), 0.0);
    parallel_for(P, cfg.threads, [&](std::size_t p) {
      if (!covered[p]) return;
      const double* xp = &x[3 * p * T];
      double acc = 0.0;
      double* g = grad ? grad->data() + 3 * p * T : nullptr;
      if (cfg.w_accel > 0.0) {
        for (std::size_t t = 1; t + 1 < T; ++t) {
          for (int k = 0; k < 3; ++k) {
            const double a = xp[3 * (t - 1) + k] - 2.0 * xp[3 * t + k] + xp[3 * (t + 1) + k];
            acc += a * a;
            if (g) {
              const double s = 2.0 * cfg.w_accel * a;
              g[3 * (t - 1) + k] += s;
              g[3 * t + k] -= 2.0 * s;
              g[3 * (t + 1) + k] += s;
            }
          }
        }
      }
      pixel_energy[p] = cfg.w_accel * acc;
      if (!g || cfg.w_arap <= 0.0) return;
      for (std::size_t i = incidence.offsets[p]; i < incidence.offsets[p + 1]; ++i) {
        const std::size_t e = incidence.edge[i];
        const std::size_t q = edges[e].first == p ? edges[e].second : edges[e].first;
        const double* xq = &x[3 * q * T];
        for (std::size_t t = 0; t < T; ++t) {
          const double s = edge_scale[e * T + t];
          if (s == 0.0) continue;
          for (int k = 0; k < 3; ++k) g[3 * t + k] += s * (xp[3 * t + k] - xq[3 * t + k]);
        }
      }
    });

    double total = 0.0;
    for (double v : pixel_energy) total += v;
    for (double v : edge_energy) total += v;
    return total;
  }
};

void initialize_free(MoMap& m, std::size_t p, InfillInit init) {
  const std::size_t T = m.frames();
  std::vector<std::size_t> known;
  for (std::size_t t = 0; t < T; ++t) {
    if (m.valid(p, t)) known.push_back(t);
  }
  for (std::size_t t = 1; t < T; ++t) {
    if (m.valid(p, t)) continue;
    const auto next = std::upper_bound(known.begin(), known.end(), t);
    const std::size_t a = *(next - 1);
    const Vec3 xa = m.position(p, a);
    Vec3 x = xa;
    if (init == InfillInit::kInterpolate) {
      if (next != known.end()) {
        const std::size_t b = *next;
        const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
        x = (1.0 - w) * xa + w * m.position(p, b);
      } else if (next - known.begin() >= 2) {
        const std::size_t a0 = *(next - 2);
        const Vec3 vel = (xa - m.position(p, a0)) / static_cast<double>(a - a0);
        x = xa + vel * static_cast<double>(t - a);
      }
    }
    m.set_position(p, t, x);
  }
}

}  // namespace

void validate(const InfillConfig& cfg) {
  if (!(cfg.w_accel >= 0.0) || !(cfg.w_arap >= 0.0)) {
    throw ValidationError("infill weights must be non-negative");
  }
  if (cfg.knn < 1) throw ValidationError("infill knn must be >= 1");
  if (cfg.max_iters < 1) throw ValidationError("infill max_iters must be >= 1");
  if (!(cfg.grad_tol >= 0.0)) throw ValidationError("infill grad_tol must be >= 0");
  if (!(cfg.step > 0.0)) throw ValidationError("infill step must be positive");
  if (!(cfg.armijo_c > 0.0) || !(cfg.armijo_c < 1.0)) {
    throw ValidationError("infill armijo_c must lie in (0, 1)");
  }
  if (!(cfg.fg_threshold > 0.0)) throw ValidationError("infill fg_threshold must be positive");
}

std::vector<std::size_t> infill_foreground(const MoMap& m, double fg_threshold) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    if (!m.covered(p)) continue;
    const Vec3 x0 = m.position(p, 0);
    for (std::size_t t = 1; t < m.frames(); ++t) {
      if (m.valid(p, t) && (m.position(p, t) - x0).norm() > fg_threshold) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

EdgeList knn_graph(const MoMap& m, const std::vector<std::size_t>& nodes, std::size_t k) {
  std::vector<Vec3> pts;
  pts.reserve(nodes.size());
  for (auto p : nodes) pts.push_back(m.position(p, 0));
  const auto nbrs = detail::nearest_neighbors(pts, k);
  EdgeList edges;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (auto j : nbrs[i]) {
      edges.emplace_back(std::min(nodes[i], nodes[j]), std::max(nodes[i], nodes[j]));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

EnergyGradient energy_and_gradient(const MoMap& m, const std::vector<std::uint8_t>& free,
                                   const EdgeList& edges, const InfillConfig& cfg) {
  if (free.size() != m.pixels() * m.frames()) {
    throw ShapeError("free mask has " + std::to_string(free.size()) + " entries, expected " +
                     std::to_string(m.pixels() * m.frames()));
  }
  for (double v : m.positions()) {
    if (!std::isfinite(v)) throw ValidationError("non-finite position in energy input");
  }
  Objective obj(m, edges, cfg);
  EnergyGradient out;
  out.energy = obj.evaluate(m, &out.gradient);
  for (std::size_t e = 0; e < free.size(); ++e) {
    if (!free[e]) std::fill_n(out.gradient.begin() + 3 * e, 3, 0.0);
  }
  return out;
}

EnergyGradient energy_and_gradient(const MoMap& m, const std::vector<std::uint8_t>& free,
                                   const InfillConfig& cfg) {
  return energy_and_gradient(m, free, knn_graph(m, infill_foreground(m, cfg.fg_threshold), cfg.knn),
                             cfg);
}

InfillResult infill(const MoMap& m, const InfillConfig& cfg) {
  validate(cfg);
  if (const auto v = validate_momap(m); !v.empty()) {
    throw ValidationError("cannot infill: " + v.front());
  }
  bool any_covered = false;
  for (std::size_t p = 0; p < m.pixels() && !any_covered; ++p) any_covered = m.covered(p);
  if (!any_covered) throw ValidationError("cannot infill: no pixel has a valid entry");

  const std::size_t T = m.frames();
  InfillResult res;
  res.momap = m;
  MoMap& x = res.momap;

  const auto fg = infill_foreground(m, cfg.fg_threshold);
  std::vector<std::uint8_t> is_fg(m.pixels(), 0);
  for (auto p : fg) is_fg[p] = 1;

  std::vector<std::uint8_t> free(m.pixels() * T, 0);
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    if (!m.covered(p) || m.fully_valid(p)) continue;
    if (is_fg[p]) {
      initialize_free(x, p, cfg.init);
      for (std::size_t t = 0; t < T; ++t) {
        if (!m.valid(p, t)) {
          free[x.entry_index(p, t)] = 1;
          ++res.free_entries;
        }
      }
    } else {
      for (std::size_t t = 1; t < T; ++t) {
        if (!m.valid(p, t)) x.set_position(p, t, m.position(p, 0));
      }
    }
    for (std::size_t t = 0; t < T; ++t) x.set_valid(p, t, true);
  }

  const EdgeList edges = knn_graph(m, fg, cfg.knn);
  Objective obj(m, edges, cfg);
  std::vector<double> grad;
  double energy = obj.evaluate(x, &grad);
  if (!std::isfinite(energy)) {
    throw NumericalError("non-finite infill energy at iterate 0");
  }
  res.energy_history.push_back(energy);

  std::vector<std::size_t> free_coords;
  for (std::size_t e = 0; e < free.size(); ++e) {
    if (free[e]) {
      for (std::size_t k = 0; k < 3; ++k) free_coords.push_back(3 * e + k);
    }
  }

  MoMap trial = x;
  double step = cfg.step;
  for (;;) {
    double g_inf = 0.0;
    double g_sq = 0.0;
    for (auto i : free_coords) {
      g_inf = std::max(g_inf, std::abs(grad[i]));
      g_sq += grad[i] * grad[i];
    }
    if (g_inf <= cfg.grad_tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= cfg.max_iters) break;

    bool accepted = false;
    double trial_energy = 0.0;
    while (step > 1e-30) {
      auto tx = trial.positions();
      const auto cx = x.positions();
      for (auto i : free_coords) tx[i] = cx[i] - step * grad[i];
      trial_energy = obj.evaluate(trial, nullptr);
      if (std::isfinite(trial_energy) &&
          trial_energy <= energy - cfg.armijo_c * step * g_sq) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!std::isfinite(trial_energy)) {
        throw NumericalError("non-finite infill energy at iterate " +
                             std::to_string(res.iterations + 1));
      }
      break;  // no descent possible at machine precision
    }
    std::swap(x, trial);
    energy = obj.evaluate(x, &grad);
    ++res.iterations;
    res.energy_history.push_back(energy);
    // trial now holds the previous iterate; it differs from x only on free
    // coordinates, which the next trial overwrites.
    step *= 2.0;
  }

  res.energy = energy;
  return res;
}

InfillConfig infill_config_from_json(const nlohmann::json& j) {
  using namespace detail;
  require_object(j, "");
  reject_unknown_keys(j,
                      {"w_accel", "w_arap", "knn", "max_iters", "grad_tol", "step",
                       "armijo_c", "fg_threshold", "init", "threads"},
                      "");
  InfillConfig cfg;
  cfg.w_accel = number_or(j, "w_accel", "", cfg.w_accel);
  cfg.w_arap = number_or(j, "w_arap", "", cfg.w_arap);
  cfg.knn = unsigned_or(j, "knn", "", cfg.knn);
  cfg.max_iters = unsigned_or(j, "max_iters", "", cfg.max_iters);
  cfg.grad_tol = number_or(j, "grad_tol", "", cfg.grad_tol);
  cfg.step = number_or(j, "step", "", cfg.step);
  cfg.armijo_c = number_or(j, "armijo_c", "", cfg.armijo_c);
  cfg.fg_threshold = number_or(j, "fg_threshold", "", cfg.fg_threshold);
  cfg.threads = static_cast<unsigned>(unsigned_or(j, "threads", "", cfg.threads));
  if (auto it = j.find("init"); it != j.end()) {
    const auto s = as_string(*it, "/init");
    if (s == "interpolate") {
      cfg.init = InfillInit::kInterpolate;
    } else if (s == "hold") {
      cfg.init = InfillInit::kHold;
    } else {
      json_fail("/init", "expected \"interpolate\" or \"hold\"");
    }
  }
  return cfg;
}

nlohmann::json to_json(const InfillConfig& cfg) {
  return {{"w_accel", cfg.w_accel},
          {"w_arap", cfg.w_arap},
          {"knn", cfg.knn},
          {"max_iters", cfg.max_iters},
          {"grad_tol", cfg.grad_tol},
          {"step", cfg.step},
          {"armijo_c", cfg.armijo_c},
          {"fg_threshold", cfg.fg_threshold},
          {"init", cfg.init == InfillInit::kInterpolate ? "interpolate" : "hold"},
          {"threads", cfg.threads}};
}

}  // namespace momap
