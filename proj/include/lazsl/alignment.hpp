#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lazsl/core.hpp"
#include "lazsl/error.hpp"
#include "lazsl/sinkhorn.hpp"

namespace lazsl {

/// Pipeline switches. The flag combinations map onto the ablation rows:
///   none            baseline (mean region/attribute similarity)
///   ot              baseline + OT
///   ot + selection  baseline + OT + VS
///   ot + hybrid     baseline + OT + Hybrid
///   all three       full pipeline (the default)
struct AlignmentConfig {
  double theta = 0.8;
  SolverConfig solver;
  bool selection_enabled = true;
  bool hybrid_enabled = true;
  bool ot_enabled = true;

  void validate() const {
    if (!(theta >= 0.0 && theta <= 1.0)) raise(ErrorCode::InvalidArgument, "theta must lie in [0, 1]");
    solver.validate();
  }

  [[nodiscard]] std::string label() const {
    if (!ot_enabled) return selection_enabled || hybrid_enabled ? "Custom(no OT)" : "Baseline";
    std::string s = "Baseline+OT";
    if (selection_enabled) s += "+VS";
    if (hybrid_enabled) s += "+Hybrid";
    return s;
  }

  static AlignmentConfig baseline() { return with_flags(false, false, false); }
  static AlignmentConfig baseline_ot() { return with_flags(true, false, false); }
  static AlignmentConfig baseline_ot_vs() { return with_flags(true, true, false); }
  static AlignmentConfig baseline_ot_hybrid() { return with_flags(true, false, true); }
  static AlignmentConfig full() { return with_flags(true, true, true); }

  /// The five ablation rows in the order they are reported.
  static std::vector<AlignmentConfig> ablation_rows(double theta = 0.8, const SolverConfig& solver = SolverConfig{}) {
    std::vector<AlignmentConfig> rows{baseline(), baseline_ot(), baseline_ot_vs(), baseline_ot_hybrid(), full()};
    for (auto& r : rows) {
      r.theta = theta;
      r.solver = solver;
    }
    return rows;
  }

 private:
  static AlignmentConfig with_flags(bool ot, bool selection, bool hybrid) {
    AlignmentConfig c;
    c.ot_enabled = ot;
    c.selection_enabled = selection;
    c.hybrid_enabled = hybrid;
    return c;
  }
};

struct SelectionResult {
  double delta = 0.0;
  std::vector<double> region_global_cosines;
  std::vector<bool> positive_mask;
  Marginal r_star;

  [[nodiscard]] std::size_t num_positive() const {
    return static_cast<std::size_t>(std::count(positive_mask.begin(), positive_mask.end(), true));
  }
};

/// Keeps the regions whose cosine to the global embedding is at least the
/// mean cosine delta and spreads the region mass uniformly over them.
[[nodiscard]] inline SelectionResult vision_select(const VisionSet& vision) {
  const std::size_t n = vision.num_regions();
  SelectionResult out;
  out.region_global_cosines.reserve(n);
  for (const auto& region : vision.regions()) out.region_global_cosines.push_back(cosine(region, vision.global()));

  const auto& cos = out.region_global_cosines;
  const double mean = std::accumulate(cos.begin(), cos.end(), 0.0) / static_cast<double>(n);
  // Rounding in the mean can leave it a few ulps above every cosine when all
  // are equal; capping at the max keeps at least one region selected.
  out.delta = std::min(mean, *std::max_element(cos.begin(), cos.end()));

  out.positive_mask.resize(n);
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.positive_mask[i] = cos[i] >= out.delta;
    positives += out.positive_mask[i] ? 1 : 0;
  }
  std::vector<double> r(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (out.positive_mask[i]) r[i] = 1.0 / static_cast<double>(positives);
  out.r_star = Marginal(std::move(r));
  return out;
}

namespace detail {

inline void check_hybrid_shapes(const SimilarityMatrix& sim, std::span<const double> global_sim, double theta) {
  if (global_sim.size() != sim.cols())
    raise(ErrorCode::ShapeMismatch, "global similarity has " + std::to_string(global_sim.size()) +
                                        " entries for " + std::to_string(sim.cols()) + " attributes");
  if (!(theta >= 0.0 && theta <= 1.0)) raise(ErrorCode::InvalidArgument, "theta must lie in [0, 1]");
}

}  // namespace detail

/// sim*_ij = theta * sim_ij + (1 - theta) * global_sim_j
[[nodiscard]] inline SimilarityMatrix hybrid_similarity(const SimilarityMatrix& sim, std::span<const double> global_sim,
                                                        double theta) {
  detail::check_hybrid_shapes(sim, global_sim, theta);
  SimilarityMatrix out(sim.rows(), sim.cols());
  for (std::size_t i = 0; i < sim.rows(); ++i)
    for (std::size_t j = 0; j < sim.cols(); ++j) out(i, j) = theta * sim(i, j) + (1.0 - theta) * global_sim[j];
  return out;
}

/// C*_ij = 1 - sim*_ij
[[nodiscard]] inline CostMatrix hybrid_cost(const SimilarityMatrix& sim, std::span<const double> global_sim,
                                            double theta) {
  detail::check_hybrid_shapes(sim, global_sim, theta);
  CostMatrix out(sim.rows(), sim.cols());
  for (std::size_t i = 0; i < sim.rows(); ++i)
    for (std::size_t j = 0; j < sim.cols(); ++j)
      out(i, j) = 1.0 - (theta * sim(i, j) + (1.0 - theta) * global_sim[j]);
  return out;
}

[[nodiscard]] inline CostMatrix cosine_cost(const SimilarityMatrix& sim) {
  CostMatrix out(sim.rows(), sim.cols());
  for (std::size_t i = 0; i < sim.rows(); ++i)
    for (std::size_t j = 0; j < sim.cols(); ++j) out(i, j) = 1.0 - sim(i, j);
  return out;
}

struct ClassScore {
  std::string class_id;
  double psi = 0.0;
  TransportPlan plan;
  std::vector<double> per_attribute_mass;
  std::vector<double> per_attribute_contribution;
};

/// Aligns one item with one class and returns psi = <T, sim*>_F together
/// with the plan and its per-attribute breakdown.
[[nodiscard]] inline ClassScore score_class(const VisionSet& vision, const SemanticSet& semantic,
                                            const AlignmentConfig& config) {
  config.validate();
  if (vision.dim() != semantic.dim())
    raise(ErrorCode::DimensionMismatch, "vision dimension " + std::to_string(vision.dim()) +
                                            " vs semantic dimension " + std::to_string(semantic.dim()));

  const SimilarityMatrix sim = similarity_matrix(vision.regions(), semantic.embeddings());
  const std::size_t n = sim.rows();
  const std::size_t m = sim.cols();

  std::vector<double> global_sim(m);
  for (std::size_t j = 0; j < m; ++j) global_sim[j] = cosine(vision.global(), semantic.embeddings()[j]);

  const Marginal r = config.selection_enabled ? vision_select(vision).r_star : Marginal::uniform(n);
  const Marginal c = Marginal::uniform(m);

  const SimilarityMatrix score_sim = config.hybrid_enabled ? hybrid_similarity(sim, global_sim, config.theta) : sim;

  ClassScore out;
  out.class_id = semantic.class_id();
  if (config.ot_enabled) {
    const CostMatrix cost = config.hybrid_enabled ? hybrid_cost(sim, global_sim, config.theta) : cosine_cost(sim);
    out.plan = sinkhorn(cost, r, c, config.solver);
  } else {
    // Independent coupling r c^T: the plain mean-similarity baseline.
    out.plan.entries = PlanMatrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) out.plan.entries(i, j) = r[i] * c[j];
    out.plan.converged = true;
  }

  out.per_attribute_mass = out.plan.entries.col_sums();
  out.per_attribute_contribution.assign(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.per_attribute_contribution[j] += out.plan(i, j) * score_sim(i, j);
  out.psi = frobenius(out.plan.entries, score_sim);
  return out;
}

struct Prediction {
  std::string item_id;
  std::string predicted_class;
  std::vector<ClassScore> ranked;  // psi descending, ties by ascending class id
  bool all_converged = true;
};

/// Orders scores by psi descending; equal psi falls back to class id order.
inline void rank_scores(std::vector<ClassScore>& scores) {
  std::stable_sort(scores.begin(), scores.end(), [](const ClassScore& a, const ClassScore& b) {
    if (a.psi != b.psi) return a.psi > b.psi;
    return a.class_id < b.class_id;
  });
}

[[nodiscard]] inline Prediction predict(const VisionSet& vision, std::span<const SemanticSet> semantics,
                                        const AlignmentConfig& config) {
  if (semantics.empty()) raise(ErrorCode::EmptyClassList, "no classes to score against");
  Prediction out;
  out.item_id = vision.item_id();
  out.ranked.reserve(semantics.size());
  for (const auto& s : semantics) {
    out.ranked.push_back(score_class(vision, s, config));
    out.all_converged = out.all_converged && out.ranked.back().plan.converged;
  }
  rank_scores(out.ranked);
  out.predicted_class = out.ranked.front().class_id;
  return out;
}

}  // namespace lazsl
