#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "momap/error.hpp"
#include "momap/momap.hpp"

namespace momap {

/// Samples drawn per input under the best-of-N protocol.
inline constexpr std::size_t kDefaultSamplesPerInput = 10;

struct MetricConfig {
  double fg_threshold = 0.05;  // meters of displacement that count as moving
  std::size_t knn = 8;
  double quantize_eps = 0.02;  // half-width of the per-axis stay band, meters
  std::vector<std::size_t> dt_values = {1, 4, 16};
  std::size_t n_samples = kDefaultSamplesPerInput;
  unsigned threads = 1;
};

/// Throws ValidationError on out-of-range settings; `frames` checks dT < T.
void validate(const MetricConfig& cfg, std::optional<std::size_t> frames = std::nullopt);

/// Raised by a metric that cannot be computed on the given inputs (empty
/// foreground, too few points or patches). evaluate_best_of_n turns it into
/// a not-applicable entry.
class NotApplicable : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

using Mask = std::vector<std::uint8_t>;

/// True where max_t |x(t) - x(0)| > fg_threshold over valid entries.
Mask moving_mask(const MoMap& m, const MetricConfig& cfg);

/// IoU of the two moving masks; 1.0 when both are empty.
double fg_mask_iou(const MoMap& gt, const MoMap& pred, const MetricConfig& cfg);
double mask_iou(const Mask& a, const Mask& b);

/// DTW alignment of two equal-rate sequences with Euclidean cost, steps
/// (1,0), (0,1), (1,1) and matched endpoints. Among minimum-cost alignments
/// the longest is chosen.
struct DtwResult {
  double cost = 0.0;         // summed matched-pair distance
  std::size_t length = 0;    // matched pairs on the path
  double normalized() const { return cost / static_cast<double>(length); }
};
DtwResult dtw_align(std::span<const Vec3> a, std::span<const Vec3> b);

double ate_dtw(const MoMap& gt, const MoMap& pred, const MetricConfig& cfg);

/// Mean |D_gt - D_pred| over the T x T intra-trajectory distance matrices of
/// each gt-foreground pixel, averaged over pixels.
double d_sig(const MoMap& gt, const MoMap& pred, const MetricConfig& cfg);
/// Per-trajectory signature difference.
double signature_difference(std::span<const Vec3> gt, std::span<const Vec3> pred);

/// Mean over (pixel, neighbor, t) of the absolute change in pairwise
/// distance, with neighbors fixed as the K nearest gt-foreground pixels at
/// gt frame 0.
double local_dist_diff(const MoMap& gt, const MoMap& pred, const MetricConfig& cfg);

/// Patch centroids per frame: centroids[t][i] for patches[i]; nullopt when a
/// patch has no valid member at t.
struct PatchCentroids {
  std::vector<std::uint32_t> patches;
  std::vector<std::vector<std::optional<Vec3>>> centroids;
};
PatchCentroids patch_centroids(const MoMap& m, const SegMap& seg);

/// Index (into centroids) of the nearest other available centroid to
/// `self`; ties resolve to the smaller patch id. nullopt when none exists.
std::optional<std::size_t> nearest_patch(const std::vector<std::optional<Vec3>>& centroids,
                                         std::size_t self);

/// Fraction of (moving patch, t) pairs whose nearest-centroid patch agrees
/// between gt and pred. A patch is moving when more than half its pixels
/// lie in the gt moving mask.
double patch_nearest_acc(const MoMap& gt, const MoMap& pred, const SegMap& seg,
                         const MetricConfig& cfg);

/// Per-axis direction label in {-1, 0, +1} with a closed stay band.
int quantize_axis(double displacement, double eps);

/// Fraction of (pixel, t, axis) triples with agreeing direction labels over
/// `dt`, on the gt moving mask.
double quantize_acc(const MoMap& gt, const MoMap& pred, std::size_t dt,
                    const MetricConfig& cfg);
/// Same on an explicit pixel mask.
double quantize_acc_on(const MoMap& gt, const MoMap& pred, const Mask& mask,
                       std::size_t dt, double eps);

/// Direction of improvement of a metric.
enum class Better { kHigher, kLower };

struct MetricValue {
  std::string name;
  Better better = Better::kLower;
  std::optional<double> value;  // nullopt = not applicable
};

/// All metrics of one candidate, in report order: fg_mask_iou, ate_dtw,
/// D_sig, local_dist_diff, patch_nearest_acc, quantize_acc_{dT}...
std::vector<MetricValue> evaluate_candidate(const MoMap& gt, const MoMap& pred,
                                            const std::optional<SegMap>& seg,
                                            const MetricConfig& cfg);

struct MetricEntry {
  std::string name;
  Better better = Better::kLower;
  std::optional<double> value;
  std::optional<std::size_t> best_index;
};

struct MetricReport {
  std::size_t n_candidates = 0;
  std::vector<MetricEntry> entries;
  /// per_candidate[i][k] = value of metric k for candidate i.
  std::vector<std::vector<std::optional<double>>> per_candidate;

  const MetricEntry& at(const std::string& name) const;
};

/// Best value per metric over the candidates (max for higher-is-better, min
/// otherwise; ties keep the lower index). Candidates are evaluated in
/// parallel when cfg.threads > 1; the result does not depend on it.
MetricReport evaluate_best_of_n(const MoMap& gt, const std::vector<MoMap>& candidates,
                                const std::optional<SegMap>& seg, const MetricConfig& cfg);

MetricConfig metric_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MetricConfig& cfg);
nlohmann::json to_json(const MetricReport& report);
/// Aligned text table, one row per metric with its arrow and selected index.
std::string format_table(const MetricReport& report);

}  // namespace momap
