#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "momap/momap.hpp"

namespace momap {

/// How free entries are seeded before descent.
enum class InfillInit {
  kInterpolate,  // linear between the nearest valid neighbors, linear extrapolation at the tail
  kHold,         // copy the nearest earlier valid value
};

struct InfillConfig {
  double w_accel = 1.0;
  double w_arap = 1.0;
  std::size_t knn = 8;
  std::size_t max_iters = 500;
  double grad_tol = 1e-6;     // meters, on the gradient infinity-norm
  double step = 1e-2;         // initial step, halved on Armijo failure
  double armijo_c = 1e-4;
  /// Pixels whose observed displacement exceeds this are optimized; the
  /// rest are held at their reference position.
  double fg_threshold = 0.05;
  InfillInit init = InfillInit::kInterpolate;
  unsigned threads = 1;
};

/// Throws ValidationError on out-of-range settings.
void validate(const InfillConfig& cfg);

/// Undirected, deduplicated edge list over pixel indices (first < second).
using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

/// K-nearest-neighbor graph among `nodes` using reference-frame positions.
/// Ties are broken by lower pixel index. Edges are undirected and unique.
EdgeList knn_graph(const MoMap& m, const std::vector<std::size_t>& nodes, std::size_t k);

/// Pixels classified as moving from their valid entries.
std::vector<std::size_t> infill_foreground(const MoMap& m, double fg_threshold);

/// Energy of the current positions and its gradient over every coordinate
/// (3 per entry, MoMap storage order); entries not marked free get zero
/// gradient.
///
///   E = w_accel * sum_p sum_t |x_p(t-1) - 2 x_p(t) + x_p(t+1)|^2
///     + w_arap  * sum_(p,q) sum_t (|x_p(t) - x_q(t)| - |x_p(0) - x_q(0)|)^2
///
/// The acceleration term runs over covered pixels, the rigidity term over
/// `edges`. Zero-length edges contribute no gradient.
struct EnergyGradient {
  double energy = 0.0;
  std::vector<double> gradient;
};

EnergyGradient energy_and_gradient(const MoMap& m, const std::vector<std::uint8_t>& free,
                                   const EdgeList& edges, const InfillConfig& cfg);

/// Same, with the rigidity graph built over infill_foreground(m).
EnergyGradient energy_and_gradient(const MoMap& m, const std::vector<std::uint8_t>& free,
                                   const InfillConfig& cfg);

struct InfillResult {
  MoMap momap;
  double energy = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Energy after initialization followed by every accepted step.
  std::vector<double> energy_history;
  std::size_t free_entries = 0;
};

/// Fills every invalid entry of covered pixels. Entries valid on input are
/// kept bit-identical. Throws ValidationError when a pixel has valid entries
/// without a valid reference frame or no pixel is covered, and
/// NumericalError if the energy becomes non-finite.
InfillResult infill(const MoMap& m, const InfillConfig& cfg = {});

InfillConfig infill_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const InfillConfig& cfg);

}  // namespace momap
