#include "momap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "knn.hpp"
#include "momap/parallel.hpp"

namespace momap {
namespace {

void check_same_dims(const MoMap& gt, const MoMap& pred) {
  if (gt.height() != pred.height() || gt.width() != pred.width() ||
      gt.frames() != pred.frames()) {
    throw ShapeError("dimension mismatch: gt is " + std::to_string(gt.height()) + "x" +
                     std::to_string(gt.width()) + "x" + std::to_string(gt.frames()) +
                     ", candidate is " + std::to_string(pred.height()) + "x" +
                     std::to_string(pred.width()) + "x" + std::to_string(pred.frames()));
  }
}

// Foreground pixels of gt; both inputs must hold complete trajectories there.
std::vector<std::size_t> foreground_pixels(const MoMap& gt, const MoMap& pred,
                                           const MetricConfig& cfg) {
  check_same_dims(gt, pred);
  const Mask mask = moving_mask(gt, cfg);
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) continue;
    if (!gt.fully_valid(p) || !pred.fully_valid(p)) {
      throw ValidationError("metrics need complete trajectories on the foreground; pixel (" +
                            std::to_string(p / gt.width()) + "," +
                            std::to_string(p % gt.width()) + ") has invalid entries");
    }
    out.push_back(p);
  }
  if (out.empty()) throw NotApplicable("ground truth has no moving pixels");
  return out;
}

std::vector<Vec3> trajectory(const MoMap& m, std::size_t p) {
  std::vector<Vec3> out(m.frames());
  for (std::size_t t = 0; t < m.frames(); ++t) out[t] = m.position(p, t);
  return out;
}

double ordered_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void validate(const MetricConfig& cfg, std::optional<std::size_t> frames) {
  if (!(cfg.fg_threshold > 0.0)) throw ValidationError("fg_threshold must be positive");
  if (!(cfg.quantize_eps > 0.0)) throw ValidationError("quantize_eps must be positive");
  if (cfg.knn < 1) throw ValidationError("knn must be >= 1");
  if (cfg.n_samples < 1) throw ValidationError("n_samples must be >= 1");
  for (auto dt : cfg.dt_values) {
    if (dt < 1) throw ValidationError("dT values must be >= 1");
    if (frames && dt >= *frames) {
      throw ValidationError("dT " + std::to_string(dt) + " must be < T = " +
                            std::to_string(*frames));
    }
  }
}

Mask moving_mask(const MoMap& m, const MetricConfig& cfg) {
  Mask mask(m.pixels(), 0);
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    if (!m.covered(p)) continue;
    const Vec3 x0 = m.position(p, 0);
    double best = 0.0;
    for (std::size_t t = 1; t < m.frames(); ++t) {
      if (m.valid(p, t)) best = std::max(best, (m.position(p, t) - x0).norm());
    }
    mask[p] = best > cfg.fg_threshold ? 1 : 0;
  }
  return mask;
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.size() != b.size()) throw ShapeError("mask sizes differ");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double fg_mask_iou(const MoMap& gt, const MoMap& pred, const MetricConfig& cfg) {
  check_same_dims(gt, pred);
  return mask_iou(moving_mask(gt, cfg), moving_mask(pred, cfg));
}

DtwResult dtw_align(std::span<const Vec3> a, std::span<const Vec3> b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == 0 || m == 0) throw ValidationError("DTW needs non-empty sequences");
  std::vector<DtwResult> d(n * m);
  auto at = [&](std::size_t i, std::size_t j) -> DtwResult& { return d[i * m + j]; };
  // (cost ascending, length descending)
  auto better = [](const DtwResult& x, const DtwResult& y) {
    return x.cost < y.cost || (x.cost == y.cost && x.length > y.length);
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = (a[i] - b[j]).norm();
      if (i == 0 && j == 0) {
        at(i, j) = {c, 1};
        continue;
      }
      const DtwResult* best = nullptr;
      if (i > 0 && j > 0) best = &at(i - 1, j - 1);
      if (i > 0 && (!best || better(at(i - 1, j), *best))) best = &at(i - 1, j);
      if (j > 0 && (!best || better(at(i, j - 1), *best))) best = &at(i, j - 1);
      at(i, j) = {best->cost + c, best->length + 1};
    }
  }
  return at(n - 1, m - 1);
}

double ate_dtw(const MoMap& gt, const MoMap& pred, const MetricConfig& cfg) {
  const auto fg = foreground_pixels(gt, pred, cfg);
  std::vector<double> score(fg.size());
  parallel_for(fg.size(), cfg.threads, [&](std::size_t i) {
    const auto a = trajectory(gt, fg[i]);
    const auto b = trajectory(pred, fg[i]);
    score[i] = dtw_align(a, b).normalized();
  });
  return ordered_mean(score);
}

double signature_difference(std::span<const Vec3> gt, std::span<const Vec3> pred) {
  if (gt.size() != pred.size() || gt.empty()) {
    throw ShapeError("signature needs equal-length non-empty trajectories");
  }
  const std::size_t n = gt.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      sum += std::abs((gt[i] - gt[j]).norm() - (pred[i] - pred[j]).norm());
    }
  }
  return sum / static_cast<double>(n * n);
}

double d_sig(const MoMap& gt, const MoMap& pred, const MetricConfig& cfg) {
  const auto fg = foreground_pixels(gt, pred, cfg);
  std::vector<double> score(fg.size());
  parallel_for(fg.size(), cfg.threads, [&](std::size_t i) {
    score[i] = signature_difference(trajectory(gt, fg[i]), trajectory(pred, fg[i]));
  });
  return ordered_mean(score);
}

double local_dist_diff(const MoMap& gt, const MoMap& pred, const MetricConfig& cfg) {
  const auto fg = foreground_pixels(gt, pred, cfg);
  if (fg.size() < cfg.knn + 1) {
    throw NotApplicable("local_dist_diff needs at least " + std::to_string(cfg.knn + 1) +
                        " foreground pixels, found " + std::to_string(fg.size()));
  }
  std::vector<Vec3> anchors;
  anchors.reserve(fg.size());
  for (auto p : fg) anchors.push_back(gt.position(p, 0));
  const auto nbrs = detail::nearest_neighbors(anchors, cfg.knn, cfg.threads);
  const std::size_t T = gt.frames();
  std::vector<double> partial(fg.size());
  parallel_for(fg.size(), cfg.threads, [&](std::size_t i) {
    double acc = 0.0;
    for (auto j : nbrs[i]) {
      for (std::size_t t = 0; t < T; ++t) {
        const double dg = (gt.position(fg[i], t) - gt.position(fg[j], t)).norm();
        const double dp = (pred.position(fg[i], t) - pred.position(fg[j], t)).norm();
        acc += std::abs(dp - dg);
      }
    }
    partial[i] = acc;
  });
  double sum = 0.0;
  for (double v : partial) sum += v;
  return sum / static_cast<double>(fg.size() * cfg.knn * T);
}

PatchCentroids patch_centroids(const MoMap& m, const SegMap& seg) {
  if (seg.height() != m.height() || seg.width() != m.width()) {
    throw ShapeError("segmentation does not match the MoMap dimensions");
  }
  PatchCentroids out;
  out.patches = seg.patch_ids();
  std::vector<std::size_t> slot(static_cast<std::size_t>(seg.max_id()) + 1, 0);
  for (std::size_t i = 0; i < out.patches.size(); ++i) slot[out.patches[i]] = i;
  out.centroids.resize(m.frames());
  for (std::size_t t = 0; t < m.frames(); ++t) {
    std::vector<Vec3> sum(out.patches.size(), Vec3::Zero());
    std::vector<std::size_t> count(out.patches.size(), 0);
    for (std::size_t p = 0; p < m.pixels(); ++p) {
      const auto id = seg.id(p);
      if (id == SegMap::kBackground || !m.valid(p, t)) continue;
      sum[slot[id]] += m.position(p, t);
      ++count[slot[id]];
    }
    auto& row = out.centroids[t];
    row.resize(out.patches.size());
    for (std::size_t i = 0; i < out.patches.size(); ++i) {
      if (count[i] > 0) row[i] = sum[i] / static_cast<double>(count[i]);
    }
  }
  return out;
}

std::optional<std::size_t> nearest_patch(const std::vector<std::optional<Vec3>>& centroids,
                                         std::size_t self) {
  if (self >= centroids.size() || !centroids[self]) return std::nullopt;
  std::optional<std::size_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    if (i == self || !centroids[i]) continue;
    const double d = (*centroids[i] - *centroids[self]).squaredNorm();
    if (d < best_d) {  // strict: earlier (smaller id) wins ties
      best_d = d;
      best = i;
    }
  }
  return best;
}

double patch_nearest_acc(const MoMap& gt, const MoMap& pred, const SegMap& seg,
                         const MetricConfig& cfg) {
  check_same_dims(gt, pred);
  const auto pg = patch_centroids(gt, seg);
  if (pg.patches.size() < 2) {
    throw NotApplicable("patch_nearest_acc needs at least 2 patches");
  }
  const auto pp = patch_centroids(pred, seg);
  const Mask mask = moving_mask(gt, cfg);

  std::vector<std::size_t> members(pg.patches.size(), 0);
  std::vector<std::size_t> moving(pg.patches.size(), 0);
  std::vector<std::size_t> slot(static_cast<std::size_t>(seg.max_id()) + 1, 0);
  for (std::size_t i = 0; i < pg.patches.size(); ++i) slot[pg.patches[i]] = i;
  for (std::size_t p = 0; p < seg.pixels(); ++p) {
    const auto id = seg.id(p);
    if (id == SegMap::kBackground) continue;
    ++members[slot[id]];
    moving[slot[id]] += mask[p] ? 1 : 0;
  }

  std::size_t agree = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < pg.patches.size(); ++i) {
    if (2 * moving[i] <= members[i]) continue;
    for (std::size_t t = 0; t < gt.frames(); ++t) {
      const auto ng = nearest_patch(pg.centroids[t], i);
      if (!ng) continue;
      const auto np = nearest_patch(pp.centroids[t], i);
      ++total;
      agree += (np && *np == *ng) ? 1 : 0;
    }
  }
  if (total == 0) throw NotApplicable("no moving foreground patch");
  return static_cast<double>(agree) / static_cast<double>(total);
}

int quantize_axis(double displacement, double eps) {
  if (std::abs(displacement) <= eps) return 0;
  return displacement > 0.0 ? 1 : -1;
}

double quantize_acc_on(const MoMap& gt, const MoMap& pred, const Mask& mask,
                       std::size_t dt, double eps) {
  check_same_dims(gt, pred);
  if (dt < 1 || dt >= gt.frames()) {
    throw ValidationError("dT " + std::to_string(dt) + " must lie in [1, T) with T = " +
                          std::to_string(gt.frames()));
  }
  if (mask.size() != gt.pixels()) throw ShapeError("mask does not match the MoMap");
  std::size_t agree = 0;
  std::size_t total = 0;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) continue;
    for (std::size_t t = 0; t + dt < gt.frames(); ++t) {
      const Vec3 dg = gt.position(p, t + dt) - gt.position(p, t);
      const Vec3 dp = pred.position(p, t + dt) - pred.position(p, t);
      for (int k = 0; k < 3; ++k) {
        agree += quantize_axis(dg[k], eps) == quantize_axis(dp[k], eps) ? 1 : 0;
        ++total;
      }
    }
  }
  if (total == 0) throw NotApplicable("no foreground pixels to quantize");
  return static_cast<double>(agree) / static_cast<double>(total);
}

double quantize_acc(const MoMap& gt, const MoMap& pred, std::size_t dt,
                    const MetricConfig& cfg) {
  if (dt < 1 || dt >= gt.frames()) {
    throw ValidationError("dT " + std::to_string(dt) + " must lie in [1, T) with T = " +
                          std::to_string(gt.frames()));
  }
  const auto fg = foreground_pixels(gt, pred, cfg);
  Mask mask(gt.pixels(), 0);
  for (auto p : fg) mask[p] = 1;
  return quantize_acc_on(gt, pred, mask, dt, cfg.quantize_eps);
}

std::vector<MetricValue> evaluate_candidate(const MoMap& gt, const MoMap& pred,
                                            const std::optional<SegMap>& seg,
                                            const MetricConfig& cfg) {
  check_same_dims(gt, pred);
  validate(cfg);
  auto guarded = [](auto&& fn) -> std::optional<double> {
    try {
      return fn();
    } catch (const NotApplicable&) {
      return std::nullopt;
    }
  };
  std::vector<MetricValue> out;
  out.push_back({"fg_mask_iou", Better::kHigher, fg_mask_iou(gt, pred, cfg)});
  out.push_back({"ate_dtw", Better::kLower, guarded([&] { return ate_dtw(gt, pred, cfg); })});
  out.push_back({"D_sig", Better::kLower, guarded([&] { return d_sig(gt, pred, cfg); })});
  out.push_back({"local_dist_diff", Better::kLower,
                 guarded([&] { return local_dist_diff(gt, pred, cfg); })});
  out.push_back({"patch_nearest_acc", Better::kHigher,
                 seg ? guarded([&] { return patch_nearest_acc(gt, pred, *seg, cfg); })
                     : std::nullopt});
  for (auto dt : cfg.dt_values) {
    // dT beyond the clip length has no displacement pairs to compare.
    out.push_back({"quantize_acc_" + std::to_string(dt), Better::kHigher,
                   dt < gt.frames() ? guarded([&] { return quantize_acc(gt, pred, dt, cfg); })
                                    : std::nullopt});
  }
  return out;
}

MetricReport evaluate_best_of_n(const MoMap& gt, const std::vector<MoMap>& candidates,
                                const std::optional<SegMap>& seg, const MetricConfig& cfg) {
  if (candidates.empty()) throw ValidationError("best-of-N needs at least one candidate");
  validate(cfg);
  for (const auto& c : candidates) check_same_dims(gt, c);
  if (seg && (seg->height() != gt.height() || seg->width() != gt.width())) {
    throw ShapeError("segmentation does not match the MoMap dimensions");
  }

  std::vector<std::vector<MetricValue>> per(candidates.size());
  MetricConfig inner = cfg;
  inner.threads = 1;
  parallel_for(candidates.size(), cfg.threads, [&](std::size_t i) {
    per[i] = evaluate_candidate(gt, candidates[i], seg, inner);
  });

  MetricReport report;
  report.n_candidates = candidates.size();
  for (const auto& v : per.front()) report.entries.push_back({v.name, v.better, {}, {}});
  report.per_candidate.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t k = 0; k < per[i].size(); ++k) {
      const auto& value = per[i][k].value;
      report.per_candidate[i].push_back(value);
      if (!value) continue;
      auto& e = report.entries[k];
      const bool improves = !e.value || (e.better == Better::kHigher ? *value > *e.value
                                                                      : *value < *e.value);
      if (improves) {
        e.value = value;
        e.best_index = i;
      }
    }
  }
  return report;
}

const MetricEntry& MetricReport::at(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  throw ValidationError("report has no metric named " + name);
}

}  // namespace momap
