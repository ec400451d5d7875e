#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "momap/error.hpp"
#include "momap/metrics.hpp"
#include "momap/synth.hpp"
#include "oracles.hpp"

namespace momap {
namespace {

using fixture::from_trajectories;

std::vector<Vec3> line(std::size_t t, const Vec3& step, const Vec3& start = Vec3(0, 0, 1)) {
  std::vector<Vec3> xs;
  for (std::size_t i = 0; i < t; ++i) xs.push_back(start + static_cast<double>(i) * step);
  return xs;
}

MoMap perturbed(const MoMap& m, SplitMix64& rng, double sigma) {
  MoMap out = m;
  for (auto& v : out.positions()) v += sigma * rng.normal();
  return out;
}

TEST(MovingMask, StaticAndHighThreshold) {
  auto m = from_trajectories({line(4, Vec3::Zero()), line(4, Vec3(0.1, 0, 0))});
  MetricConfig cfg;
  EXPECT_EQ(moving_mask(m, cfg), (Mask{0, 1}));
  cfg.fg_threshold = 10;
  EXPECT_EQ(moving_mask(m, cfg), (Mask{0, 0}));
  auto stat = from_trajectories({line(4, Vec3::Zero()), line(4, Vec3::Zero())});
  EXPECT_EQ(moving_mask(stat, MetricConfig{}), (Mask{0, 0}));
}

TEST(FgMaskIou, Examples) {
  const auto a = from_trajectories({line(3, Vec3(1, 0, 0)), line(3, Vec3::Zero())});
  const auto b = from_trajectories({line(3, Vec3::Zero()), line(3, Vec3(1, 0, 0))});
  EXPECT_EQ(fg_mask_iou(a, a, MetricConfig{}), 1.0);
  EXPECT_EQ(fg_mask_iou(a, b, MetricConfig{}), 0.0);
  const auto none = from_trajectories({line(3, Vec3::Zero())});
  EXPECT_EQ(fg_mask_iou(none, none, MetricConfig{}), 1.0);
  // |A| = |B| = 2k, |A n B| = k with k = 2.
  Mask ma{1, 1, 1, 1, 0, 0}, mb{0, 0, 1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(mask_iou(ma, mb), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(mask_iou(ma, mb), oracle::set_iou({0, 1, 2, 3}, {2, 3, 4, 5}));
}

TEST(FgMaskIou, MatchesSetEnumeration) {
  SplitMix64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    Mask a(30), b(30);
    std::set<std::size_t> sa, sb;
    for (std::size_t i = 0; i < 30; ++i) {
      a[i] = rng.uniform() < 0.4;
      b[i] = rng.uniform() < 0.4;
      if (a[i]) sa.insert(i);
      if (b[i]) sb.insert(i);
    }
    EXPECT_DOUBLE_EQ(mask_iou(a, b), oracle::set_iou(sa, sb));
  }
  EXPECT_THROW(mask_iou(Mask(2), Mask(3)), ShapeError);
}

TEST(Dtw, MatchesBruteForceOnShortSequences) {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(6);
    const std::size_t m = 1 + rng.index(6);
    const auto a = fixture::random_walk(rng, n);
    const auto b = fixture::random_walk(rng, m);
    const auto dp = dtw_align(a, b);
    const auto bf = oracle::brute_force_dtw(a, b);
    EXPECT_NEAR(dp.cost, bf.cost, 1e-12);
    EXPECT_EQ(dp.length, bf.length);
  }
}

TEST(Dtw, BruteForceCountsAllAlignments) {
  // Delannoy numbers D(n-1, m-1).
  std::vector<Vec3> a(3, Vec3::Zero()), b(3, Vec3::Zero());
  EXPECT_EQ(oracle::brute_force_dtw(a, b).paths, 13u);
  a.resize(6);
  b.resize(6);
  EXPECT_EQ(oracle::brute_force_dtw(a, b).paths, 1683u);
}

TEST(AteDtw, IdentityOffsetAndHalfSpeed) {
  const auto gt = from_trajectories({line(5, Vec3(1, 0, 0)), line(5, Vec3(0, 0.5, 0))});
  EXPECT_EQ(ate_dtw(gt, gt, MetricConfig{}), 0.0);

  const Vec3 d(0.0, 0.0, 0.5);  // orthogonal to both motions
  MoMap shifted = gt;
  for (std::size_t p = 0; p < 2; ++p)
    for (std::size_t t = 0; t < 5; ++t) shifted.set_position(p, t, gt.position(p, t) + d);
  EXPECT_NEAR(ate_dtw(gt, shifted, MetricConfig{}), 0.5, 1e-12);

  const std::vector<Vec3> g = line(5, Vec3(1, 0, 0));
  const std::vector<Vec3> half{g[0], g[0], g[1], g[1], g[2]};
  const auto bf = oracle::brute_force_dtw(g, half);
  EXPECT_NEAR(ate_dtw(from_trajectories({g}), from_trajectories({half}), MetricConfig{}),
              bf.cost / static_cast<double>(bf.length), 1e-12);
}

TEST(AteDtw, BoundedByUnalignedAte) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<Vec3>> ga, pa;
    double ate = 0.0;
    for (int p = 0; p < 4; ++p) {
      ga.push_back(fixture::random_walk(rng, 8));
      pa.push_back(fixture::random_walk(rng, 8));
      double s = 0.0;
      for (int t = 0; t < 8; ++t) s += (ga.back()[t] - pa.back()[t]).norm();
      ate += s / 8.0;
    }
    MetricConfig cfg;
    cfg.fg_threshold = 1e-9;
    const auto gt = from_trajectories(ga);
    if (moving_mask(gt, cfg) != Mask(4, 1)) continue;
    EXPECT_LE(ate_dtw(gt, from_trajectories(pa), cfg), ate / 4.0 + 1e-12);
  }
}

TEST(AteDtw, EmptyForegroundIsNotApplicable) {
  const auto gt = from_trajectories({line(3, Vec3::Zero())});
  EXPECT_THROW(ate_dtw(gt, gt, MetricConfig{}), NotApplicable);
}

TEST(Dsig, HandComputedHalf) {
  // D_gt = 0, D_pred = [[0,1],[1,0]]: mean |diff| = 2/4.
  const std::vector<Vec3> gt{Vec3(0, 0, 1), Vec3(0, 0, 1)};
  const std::vector<Vec3> pred{Vec3(0, 0, 1), Vec3(1, 0, 1)};
  EXPECT_EQ(signature_difference(gt, pred), 0.5);
}

TEST(Dsig, IdentityAndRigidInvariance) {
  SplitMix64 rng(4);
  const auto gt = generate(random_scene(4, 16, 16, 10)).momap;
  const MetricConfig cfg;
  EXPECT_EQ(d_sig(gt, gt, cfg), 0.0);
  const auto pred = perturbed(gt, rng, 0.05);
  const double base = d_sig(gt, pred, cfg);
  EXPECT_GT(base, 0.0);
  for (int i = 0; i < 20; ++i) {
    const auto g = random_rigid(rng, 3.0);
    EXPECT_LT(d_sig(gt, apply_rigid(gt, g), cfg), 1e-9);
    EXPECT_NEAR(d_sig(gt, apply_rigid(pred, g), cfg), base, 1e-9);
  }
}

// Mean gt neighbor distance with neighbors enumerated directly.
double mean_neighbor_distance(const MoMap& gt, std::size_t k) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < gt.pixels(); ++p) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t q = 0; q < gt.pixels(); ++q)
      if (q != p) d.emplace_back((gt.position(p, 0) - gt.position(q, 0)).norm(), q);
    std::sort(d.begin(), d.end());
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t t = 0; t < gt.frames(); ++t) {
        sum += (gt.position(p, t) - gt.position(d[j].second, t)).norm();
        ++n;
      }
  }
  return sum / static_cast<double>(n);
}

TEST(LocalDistDiff, IdentityScaleAndNoiseOrdering) {
  SplitMix64 rng(5);
  const auto gt = fixture::random_momap(rng, 4, 4, 5);
  MetricConfig cfg;
  cfg.knn = 4;
  ASSERT_EQ(moving_mask(gt, cfg), Mask(16, 1));
  EXPECT_EQ(local_dist_diff(gt, gt, cfg), 0.0);

  MoMap doubled = gt;
  for (auto& v : doubled.positions()) v *= 2.0;
  EXPECT_NEAR(local_dist_diff(gt, doubled, cfg), mean_neighbor_distance(gt, 4), 1e-12);

  const double sigma = 0.05;
  MoMap noisy = gt;
  MoMap shifted = gt;
  for (std::size_t p = 0; p < gt.pixels(); ++p)
    for (std::size_t t = 0; t < gt.frames(); ++t) {
      const Vec3 dir = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
      noisy.set_position(p, t, gt.position(p, t) + sigma * dir);
      shifted.set_position(p, t, gt.position(p, t) + sigma * Vec3(0.6, 0.8, 0));
    }
  EXPECT_LT(local_dist_diff(gt, shifted, cfg), 1e-12);
  EXPECT_GT(local_dist_diff(gt, noisy, cfg), 1e-3);
}

TEST(LocalDistDiff, TooFewForegroundPixels) {
  SplitMix64 rng(6);
  const auto gt = fixture::random_momap(rng, 2, 2, 3);
  EXPECT_THROW(local_dist_diff(gt, gt, MetricConfig{}), NotApplicable);
}

TEST(PatchNearest, CollinearExample) {
  // Patches 1, 2, 3 at x = 0, 1, 3; only patch 2 moves in gt (along y).
  const std::size_t T = 3;
  std::vector<Vec3> mid = line(T, Vec3::Zero(), Vec3(1, 0, 1));
  mid[2] += Vec3(0, 0.1, 0);
  const auto gt = from_trajectories({line(T, Vec3::Zero(), Vec3(0, 0, 1)), mid,
                                     line(T, Vec3::Zero(), Vec3(3, 0, 1))});
  auto pred = gt;
  for (std::size_t t = 0; t < T; ++t) pred.set_position(1, t, Vec3(2.5, 0, 1));
  const SegMap seg(1, 3, {1, 2, 3});
  const MetricConfig cfg;
  EXPECT_EQ(patch_nearest_acc(gt, gt, seg, cfg), 1.0);
  EXPECT_EQ(patch_nearest_acc(gt, pred, seg, cfg), 0.0);

  const auto pc = patch_centroids(gt, seg);
  EXPECT_EQ(nearest_patch(pc.centroids[0], 1), std::optional<std::size_t>(0));
  EXPECT_EQ(nearest_patch(patch_centroids(pred, seg).centroids[0], 1),
            std::optional<std::size_t>(2));
}

TEST(PatchNearest, TwoPatchesAlwaysAgree) {
  SplitMix64 rng(7);
  const auto gt = from_trajectories({line(4, Vec3(0.2, 0, 0)), line(4, Vec3::Zero(), Vec3(2, 0, 1))});
  const SegMap seg(1, 2, {1, 2});
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(patch_nearest_acc(gt, perturbed(gt, rng, 1.0), seg, MetricConfig{}), 1.0);
  }
}

TEST(PatchNearest, TiesAndErrors) {
  std::vector<std::optional<Vec3>> c{Vec3(-1, 0, 0), Vec3(0, 0, 0), Vec3(1, 0, 0)};
  EXPECT_EQ(nearest_patch(c, 1), std::optional<std::size_t>(0));
  c[0].reset();
  EXPECT_EQ(nearest_patch(c, 1), std::optional<std::size_t>(2));
  c[2].reset();
  EXPECT_EQ(nearest_patch(c, 1), std::nullopt);
  const auto gt = from_trajectories({line(3, Vec3(1, 0, 0)), line(3, Vec3::Zero())});
  EXPECT_THROW(patch_nearest_acc(gt, gt, SegMap(1, 2, {1, 1}), MetricConfig{}), NotApplicable);
  EXPECT_THROW(patch_nearest_acc(gt, gt, SegMap(1, 2, {0, 0}), MetricConfig{}), NotApplicable);
  EXPECT_THROW(patch_nearest_acc(gt, gt, SegMap(2, 1, {1, 2}), MetricConfig{}), ShapeError);
}

TEST(Quantize, Examples) {
  const auto gt = from_trajectories({line(4, Vec3(0.1, 0, 0))});
  const auto opposite = from_trajectories({line(4, Vec3(-0.1, 0, 0))});
  const MetricConfig cfg;
  EXPECT_EQ(quantize_acc(gt, gt, 1, cfg), 1.0);
  EXPECT_DOUBLE_EQ(quantize_acc(gt, opposite, 1, cfg), 2.0 / 3.0);
  const auto slow = from_trajectories({line(4, Vec3(0.01, 0.005, 0))});
  EXPECT_EQ(quantize_acc(gt, slow, 1, cfg), 2.0 / 3.0);
  EXPECT_EQ(quantize_acc_on(slow, slow, Mask{1}, 1, 0.02), 1.0);
  EXPECT_THROW(quantize_acc(gt, gt, 4, cfg), ValidationError);
  EXPECT_THROW(quantize_acc(gt, gt, 0, cfg), ValidationError);
}

TEST(Quantize, ClosedStayBand) {
  EXPECT_EQ(quantize_axis(0.02, 0.02), 0);
  EXPECT_EQ(quantize_axis(-0.02, 0.02), 0);
  EXPECT_EQ(quantize_axis(0.0200001, 0.02), 1);
  EXPECT_EQ(quantize_axis(-0.0200001, 0.02), -1);
}

TEST(Quantize, SymmetricOnAFixedMask) {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = fixture::random_momap(rng, 3, 3, 6);
    const auto b = fixture::random_momap(rng, 3, 3, 6);
    Mask mask(9);
    for (auto& v : mask) v = rng.uniform() < 0.7;
    mask[0] = 1;
    for (std::size_t dt : {1, 2, 5}) {
      EXPECT_EQ(quantize_acc_on(a, b, mask, dt, 0.5), quantize_acc_on(b, a, mask, dt, 0.5));
    }
  }
}

std::vector<MoMap> candidates_around(const MoMap& gt, SplitMix64& rng, std::size_t n) {
  std::vector<MoMap> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(perturbed(gt, rng, 0.01 + 0.02 * rng.uniform()));
  return out;
}

void expect_brute_force_best(const MetricReport& r, const std::vector<std::vector<MetricValue>>& per) {
  for (std::size_t k = 0; k < r.entries.size(); ++k) {
    std::optional<double> best;
    std::optional<std::size_t> idx;
    for (std::size_t i = 0; i < per.size(); ++i) {
      const auto& v = per[i][k].value;
      if (!v) continue;
      const bool higher = per[i][k].better == Better::kHigher;
      if (!best || (higher ? *v > *best : *v < *best)) {
        best = v;
        idx = i;
      }
    }
    EXPECT_EQ(r.entries[k].value, best) << r.entries[k].name;
    EXPECT_EQ(r.entries[k].best_index, idx) << r.entries[k].name;
  }
}

TEST(BestOfN, MatchesExhaustiveScanAndNeverWorsens) {
  SplitMix64 rng(9);
  const auto scene = generate(random_scene(9, 24, 24, 20));
  MetricConfig cfg;
  auto cands = candidates_around(scene.momap, rng, kDefaultSamplesPerInput);
  const auto report = evaluate_best_of_n(scene.momap, cands, scene.seg, cfg);
  ASSERT_EQ(report.n_candidates, 10u);
  std::vector<std::vector<MetricValue>> per;
  for (const auto& c : cands) per.push_back(evaluate_candidate(scene.momap, c, scene.seg, cfg));
  expect_brute_force_best(report, per);

  cands.push_back(perturbed(scene.momap, rng, 0.005));
  const auto more = evaluate_best_of_n(scene.momap, cands, scene.seg, cfg);
  for (std::size_t k = 0; k < report.entries.size(); ++k) {
    const auto& a = report.entries[k];
    const auto& b = more.entries[k];
    if (!a.value) continue;
    ASSERT_TRUE(b.value);
    if (a.better == Better::kHigher) EXPECT_GE(*b.value, *a.value) << a.name;
    else EXPECT_LE(*b.value, *a.value) << a.name;
  }
}

TEST(BestOfN, SingleCandidateAndPerfectFirst) {
  SplitMix64 rng(10);
  const auto scene = generate(random_scene(10, 20, 20, 12));
  const MetricConfig cfg;
  const auto noisy = perturbed(scene.momap, rng, 0.05);
  const auto single = evaluate_best_of_n(scene.momap, {noisy}, scene.seg, cfg);
  const auto direct = evaluate_candidate(scene.momap, noisy, scene.seg, cfg);
  for (std::size_t k = 0; k < direct.size(); ++k) EXPECT_EQ(single.entries[k].value, direct[k].value);

  const auto pair = evaluate_best_of_n(scene.momap, {scene.momap, noisy}, scene.seg, cfg);
  for (const auto& e : pair.entries) {
    if (!e.value) continue;
    EXPECT_EQ(e.best_index, std::optional<std::size_t>(0)) << e.name;
    EXPECT_EQ(*e.value, e.better == Better::kHigher ? 1.0 : 0.0) << e.name;
  }
  EXPECT_FALSE(pair.at("quantize_acc_16").value);  // dT >= T
  EXPECT_THROW(evaluate_best_of_n(scene.momap, {}, scene.seg, cfg), ValidationError);
  EXPECT_THROW(evaluate_best_of_n(scene.momap, {MoMap(2, 2, 2)}, scene.seg, cfg), ShapeError);
}

TEST(BestOfN, ThreadCountDoesNotChangeReport) {
  SplitMix64 rng(11);
  const auto scene = generate(random_scene(11, 24, 24, 20));
  const auto cands = candidates_around(scene.momap, rng, 10);
  MetricConfig one, many;
  many.threads = 8;
  const auto a = evaluate_best_of_n(scene.momap, cands, scene.seg, one);
  const auto b = evaluate_best_of_n(scene.momap, cands, scene.seg, many);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  one.threads = 4;
  EXPECT_EQ(ate_dtw(scene.momap, cands[0], one), ate_dtw(scene.momap, cands[0], MetricConfig{}));
  EXPECT_EQ(local_dist_diff(scene.momap, cands[0], one),
            local_dist_diff(scene.momap, cands[0], MetricConfig{}));
}

TEST(MetricReport, JsonAndTable) {
  const auto gt = generate(random_scene(12, 16, 16, 6)).momap;
  const auto r = evaluate_best_of_n(gt, {gt}, std::nullopt, MetricConfig{});
  const auto j = to_json(r);
  ASSERT_EQ(j["metrics"].size(), 8u);
  EXPECT_EQ(j["metrics"][0]["name"], "fg_mask_iou");
  EXPECT_EQ(j["metrics"][0]["better"], "higher");
  EXPECT_EQ(j["metrics"][2]["name"], "D_sig");
  EXPECT_TRUE(j["metrics"][4]["value"].is_null());  // no segmentation
  EXPECT_EQ(j["metrics"][5]["name"], "quantize_acc_1");
  EXPECT_TRUE(j["metrics"][7]["value"].is_null());  // dT 16 >= T 6
  const auto table = format_table(r);
  for (const char* row : {"fg_mask_iou ↑", "ate_dtw ↓", "D_sig ↓", "local_dist_diff ↓",
                          "patch_nearest_acc ↑", "quantize_acc_1 ↑", "quantize_acc_4 ↑"}) {
    EXPECT_NE(table.find(row), std::string::npos) << row;
  }
  EXPECT_NE(table.find("n/a"), std::string::npos);
}

TEST(MetricConfigJson, RoundTripAndValidation) {
  MetricConfig cfg;
  cfg.fg_threshold = 0.1;
  cfg.dt_values = {1, 2};
  const auto back = metric_config_from_json(to_json(cfg));
  EXPECT_EQ(back.fg_threshold, 0.1);
  EXPECT_EQ(back.dt_values, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(MetricConfig{}.dt_values, (std::vector<std::size_t>{1, 4, 16}));
  EXPECT_EQ(MetricConfig{}.n_samples, 10u);
  EXPECT_THROW(metric_config_from_json(nlohmann::json{{"fg", 1}}), ParseError);
  MetricConfig bad;
  bad.quantize_eps = 0;
  EXPECT_THROW(validate(bad), ValidationError);
  EXPECT_THROW(validate(MetricConfig{}, 10), ValidationError);
  EXPECT_NO_THROW(validate(MetricConfig{}, 17));
}

}  // namespace
}  // namespace momap
