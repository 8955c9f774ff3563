#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lazsl/alignment.hpp"
#include "lazsl/core.hpp"
#include "lazsl/error.hpp"

namespace lazsl {

struct ItemResult {
  std::string item_id;
  std::string label;
  std::string predicted;
  bool correct = false;
  bool converged = true;
  double seconds = 0.0;
};

struct ConfigResult {
  AlignmentConfig config;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
  std::size_t non_converged_items = 0;
  double mean_seconds_per_item = 0.0;
  std::size_t peak_memory_bytes = 0;
  std::vector<ItemResult> items;
};

struct EvalReport {
  std::vector<ConfigResult> rows;  // one per config, in the order given
};

/// Rough upper bound on the scoring working set for one item/class pair:
/// the N x M similarity, hybrid similarity, cost, kernel and plan, plus the
/// embeddings themselves.
[[nodiscard]] inline std::size_t scoring_memory_estimate(std::size_t n, std::size_t m, std::size_t dim) {
  return sizeof(double) * (5 * n * m + 4 * (n + m) + (n + 1 + m) * dim);
}

namespace detail {

inline void check_labels(std::span<const VisionSet> items, std::span<const SemanticSet> classes,
                         std::span<const std::string> labels) {
  if (labels.size() != items.size())
    raise(ErrorCode::IdMismatch, std::to_string(labels.size()) + " labels for " + std::to_string(items.size()) +
                                     " items");
  std::set<std::string> ids;
  for (const auto& c : classes)
    if (!ids.insert(c.class_id()).second) raise(ErrorCode::IdMismatch, "duplicate class id '" + c.class_id() + "'");
  for (const auto& l : labels)
    if (!ids.contains(l)) raise(ErrorCode::IdMismatch, "label '" + l + "' is not a known class id");
}

}  // namespace detail

[[nodiscard]] inline ConfigResult evaluate_config(std::span<const VisionSet> items, std::span<const SemanticSet> classes,
                                                  std::span<const std::string> labels, const AlignmentConfig& config) {
  ConfigResult row;
  row.config = config;
  row.total = items.size();
  std::size_t max_m = 0;
  for (const auto& c : classes) max_m = std::max(max_m, c.num_attributes());

  double seconds = 0.0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const Prediction p = predict(items[k], classes, config);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    ItemResult r{items[k].item_id(), labels[k], p.predicted_class, p.predicted_class == labels[k],
                 p.all_converged, dt};
    row.correct += r.correct ? 1 : 0;
    row.non_converged_items += r.converged ? 0 : 1;
    seconds += dt;
    row.peak_memory_bytes =
        std::max(row.peak_memory_bytes, scoring_memory_estimate(items[k].num_regions(), max_m, items[k].dim()));
    row.items.push_back(std::move(r));
  }
  row.accuracy = row.total == 0 ? 0.0 : static_cast<double>(row.correct) / static_cast<double>(row.total);
  row.mean_seconds_per_item = row.total == 0 ? 0.0 : seconds / static_cast<double>(row.total);
  return row;
}

/// Scores every item under every config. Item order is the input order for
/// all configs; scoring has no hidden randomness.
[[nodiscard]] inline EvalReport run_eval(std::span<const VisionSet> items, std::span<const SemanticSet> classes,
                                         std::span<const std::string> labels,
                                         std::span<const AlignmentConfig> configs) {
  if (classes.empty()) raise(ErrorCode::EmptyClassList, "no classes to evaluate against");
  detail::check_labels(items, classes, labels);
  EvalReport report;
  for (const auto& config : configs) report.rows.push_back(evaluate_config(items, classes, labels, config));
  return report;
}

struct SweepPoint {
  double theta;
  double accuracy;
};

[[nodiscard]] inline std::vector<SweepPoint> theta_sweep(std::span<const VisionSet> items,
                                                         std::span<const SemanticSet> classes,
                                                         std::span<const std::string> labels,
                                                         const AlignmentConfig& base, std::span<const double> thetas) {
  std::vector<AlignmentConfig> configs;
  for (double t : thetas) {
    AlignmentConfig c = base;
    c.theta = t;
    configs.push_back(c);
  }
  const EvalReport report = run_eval(items, classes, labels, configs);
  std::vector<SweepPoint> out;
  for (std::size_t k = 0; k < thetas.size(); ++k) out.push_back({thetas[k], report.rows[k].accuracy});
  return out;
}

inline void write_sweep_csv(std::ostream& os, std::span<const SweepPoint> points) {
  os << "theta,accuracy\n";
  for (const auto& p : points) os << p.theta << ',' << p.accuracy << '\n';
}

inline nlohmann::json to_json(const AlignmentConfig& c) {
  return {{"label", c.label()},
          {"theta", c.theta},
          {"lambda", c.solver.lambda},
          {"max_iters", c.solver.max_iters},
          {"tol", c.solver.tol},
          {"ot", c.ot_enabled},
          {"vision_selection", c.selection_enabled},
          {"hybrid", c.hybrid_enabled}};
}

inline nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& it : r.items)
      items.push_back({{"item_id", it.item_id},
                       {"label", it.label},
                       {"predicted", it.predicted},
                       {"correct", it.correct},
                       {"converged", it.converged},
                       {"seconds", it.seconds}});
    rows.push_back({{"config", to_json(r.config)},
                    {"accuracy", r.accuracy},
                    {"correct", r.correct},
                    {"total", r.total},
                    {"non_converged_items", r.non_converged_items},
                    {"mean_seconds_per_item", r.mean_seconds_per_item},
                    {"peak_memory_bytes_estimate", r.peak_memory_bytes},
                    {"predictions", std::move(items)}});
  }
  return {{"rows", std::move(rows)}};
}

/// One JSON-lines record: the top-k classes with per-attribute breakdowns.
inline nlohmann::json prediction_record(const Prediction& p, const std::vector<SemanticSet>& classes,
                                        std::size_t top_k) {
  nlohmann::json top = nlohmann::json::array();
  for (std::size_t k = 0; k < std::min(top_k, p.ranked.size()); ++k) {
    const ClassScore& s = p.ranked[k];
    const auto it = std::find_if(classes.begin(), classes.end(),
                                 [&](const SemanticSet& c) { return c.class_id() == s.class_id; });
    nlohmann::json attrs = nlohmann::json::array();
    for (std::size_t j = 0; j < s.per_attribute_contribution.size(); ++j)
      attrs.push_back({{"text", it == classes.end() ? std::string() : it->texts()[j]},
                       {"mass", s.per_attribute_mass[j]},
                       {"contribution", s.per_attribute_contribution[j]}});
    top.push_back({{"class_id", s.class_id},
                   {"class_name", it == classes.end() ? std::string() : it->class_name()},
                   {"psi", s.psi},
                   {"converged", s.plan.converged},
                   {"iterations", s.plan.iterations_used},
                   {"attributes", std::move(attrs)}});
  }
  return {{"item_id", p.item_id}, {"predicted", p.predicted_class}, {"converged", p.all_converged},
          {"top", std::move(top)}};
}

}  // namespace lazsl
