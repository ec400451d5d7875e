#include <cstdio>
#include <sstream>

#include "json_util.hpp"
#include "momap/metrics.hpp"

namespace momap {
namespace {

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

MetricConfig metric_config_from_json(const nlohmann::json& j) {
  using namespace detail;
  require_object(j, "");
  reject_unknown_keys(j,
                      {"fg_threshold", "knn", "quantize_eps", "dt_values", "n_samples",
                       "threads"},
                      "");
  MetricConfig cfg;
  cfg.fg_threshold = number_or(j, "fg_threshold", "", cfg.fg_threshold);
  cfg.knn = unsigned_or(j, "knn", "", cfg.knn);
  cfg.quantize_eps = number_or(j, "quantize_eps", "", cfg.quantize_eps);
  cfg.n_samples = unsigned_or(j, "n_samples", "", cfg.n_samples);
  cfg.threads = static_cast<unsigned>(unsigned_or(j, "threads", "", cfg.threads));
  if (auto it = j.find("dt_values"); it != j.end()) {
    if (!it->is_array()) json_fail("/dt_values", "expected an array");
    cfg.dt_values.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      cfg.dt_values.push_back(as_unsigned((*it)[i], "/dt_values/" + std::to_string(i)));
    }
  }
  return cfg;
}

nlohmann::json to_json(const MetricConfig& cfg) {
  return {{"fg_threshold", cfg.fg_threshold},
          {"knn", cfg.knn},
          {"quantize_eps", cfg.quantize_eps},
          {"dt_values", cfg.dt_values},
          {"n_samples", cfg.n_samples}};
}

nlohmann::json to_json(const MetricReport& report) {
  nlohmann::json metrics = nlohmann::json::array();
  for (const auto& e : report.entries) {
    metrics.push_back({{"name", e.name},
                       {"better", e.better == Better::kHigher ? "higher" : "lower"},
                       {"value", optional_number(e.value)},
                       {"best_index", e.best_index ? nlohmann::json(*e.best_index)
                                                   : nlohmann::json(nullptr)}});
  }
  nlohmann::json per = nlohmann::json::array();
  for (const auto& row : report.per_candidate) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& v : row) r.push_back(optional_number(v));
    per.push_back(std::move(r));
  }
  return {{"n_candidates", report.n_candidates}, {"metrics", metrics}, {"per_candidate", per}};
}

std::string format_table(const MetricReport& report) {
  std::size_t width = 6;
  for (const auto& e : report.entries) width = std::max(width, e.name.size() + 2);
  std::ostringstream os;
  auto pad = [&](const std::string& s, std::size_t visible) {
    os << s << std::string(width + 2 - visible, ' ');
  };
  pad("metric", 6);
  os << "best        sample\n";
  for (const auto& e : report.entries) {
    pad(e.name + (e.better == Better::kHigher ? " ↑" : " ↓"), e.name.size() + 2);
    char buf[32];
    if (e.value) {
      std::snprintf(buf, sizeof buf, "%-10.4f", *e.value);
    } else {
      std::snprintf(buf, sizeof buf, "%-10s", "n/a");
    }
    os << buf << "  " << (e.best_index ? std::to_string(*e.best_index) : "-") << "\n";
  }
  return os.str();
}

}  // namespace momap
