#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lazsl/core.hpp"
#include "lazsl/error.hpp"

namespace lazsl {

/// Nonnegative weights summing to one.
class Marginal {
 public:
  static constexpr double kSumTolerance = 1e-9;

  Marginal() = default;
  explicit Marginal(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) raise(ErrorCode::InvalidArgument, "marginal must be nonempty");
    double sum = 0.0;
    for (double w : weights_) {
      if (!std::isfinite(w) || w < 0.0) raise(ErrorCode::InvalidArgument, "marginal weights must be finite and >= 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      raise(ErrorCode::InvalidArgument, "marginal sums to " + std::to_string(sum) + ", not 1");
  }
  Marginal(std::initializer_list<double> weights) : Marginal(std::vector<double>(weights)) {}

  static Marginal uniform(std::size_t n) {
    if (n == 0) raise(ErrorCode::InvalidArgument, "uniform marginal of size 0");
    return Marginal(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
  [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t i) const noexcept { return weights_[i]; }

  friend bool operator==(const Marginal&, const Marginal&) = default;

 private:
  std::vector<double> weights_;
};

enum class SinkhornDomain {
  Auto,    // kernel scaling, switching to log domain if exp(-C/lambda) underflows
  Kernel,  // always kernel scaling
  Log,     // always log-sum-exp potentials
};

struct SolverConfig {
  double lambda = 0.1;
  int max_iters = 100;
  double tol = 1e-6;
  SinkhornDomain domain = SinkhornDomain::Auto;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) raise(ErrorCode::InvalidArgument, "lambda must be > 0");
    if (max_iters < 1) raise(ErrorCode::InvalidArgument, "max_iters must be >= 1");
    if (!(tol > 0.0)) raise(ErrorCode::InvalidArgument, "tol must be > 0");
  }
};

struct TransportPlan {
  PlanMatrix entries;
  bool converged = false;
  int iterations_used = 0;
  bool log_domain = false;
  double marginal_error = 0.0;  // max row/column L1 violation of the last scaling step

  [[nodiscard]] std::size_t rows() const noexcept { return entries.rows(); }
  [[nodiscard]] std::size_t cols() const noexcept { return entries.cols(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return entries(i, j); }
};

/// Max of the L1 distances between the plan's row/column sums and (r, c).
[[nodiscard]] inline double marginal_violation(const PlanMatrix& plan, const Marginal& r, const Marginal& c) {
  const auto rows = plan.row_sums();
  const auto cols = plan.col_sums();
  double er = 0.0;
  double ec = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) er += std::abs(rows[i] - r[i]);
  for (std::size_t j = 0; j < cols.size(); ++j) ec += std::abs(cols[j] - c[j]);
  return std::max(er, ec);
}

[[nodiscard]] inline double transport_cost(const PlanMatrix& plan, const CostMatrix& cost) {
  return frobenius(plan, cost);
}

[[nodiscard]] inline double transport_cost(const TransportPlan& plan, const CostMatrix& cost) {
  return transport_cost(plan.entries, cost);
}

namespace detail {

// Cost, marginals and plan restricted to the rows/columns carrying mass.
struct ActiveProblem {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  std::vector<double> r;
  std::vector<double> c;
  std::vector<double> cost;  // rows.size() x cols.size(), row-major

  [[nodiscard]] std::size_t n() const noexcept { return rows.size(); }
  [[nodiscard]] std::size_t m() const noexcept { return cols.size(); }
};

inline ActiveProblem restrict_to_support(const CostMatrix& cost, const Marginal& r, const Marginal& c) {
  ActiveProblem p;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i] > 0.0) {
      p.rows.push_back(i);
      p.r.push_back(r[i]);
    }
  for (std::size_t j = 0; j < c.size(); ++j)
    if (c[j] > 0.0) {
      p.cols.push_back(j);
      p.c.push_back(c[j]);
    }
  p.cost.reserve(p.n() * p.m());
  for (std::size_t i : p.rows)
    for (std::size_t j : p.cols) p.cost.push_back(cost(i, j));
  return p;
}

/// Correctly rounded running sum (Shewchuk partials). The result does not
/// depend on the order of the terms, so reductions over rows give identical
/// plans when the rows are permuted.
class ExactSum {
 public:
  void add(double x) noexcept {
    std::size_t k = 0;
    for (std::size_t p = 0; p < count_; ++p) {
      double y = partials_[p];
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[k++] = lo;
      x = hi;
    }
    if (k == partials_.size()) {
      // Cannot happen for finite doubles; fold instead of overflowing.
      partials_[k - 1] += x;
      count_ = k;
      return;
    }
    partials_[k] = x;
    count_ = k + 1;
  }

  [[nodiscard]] double value() const noexcept {
    if (count_ == 0) return 0.0;
    std::size_t n = count_;
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    // Round half-way cases using the sign of the remaining partials.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

 private:
  std::array<double, 48> partials_;  // only [0, count_) is meaningful
  std::size_t count_ = 0;
};

inline double l1_gap(std::span<const double> got, std::span<const double> want) {
  ExactSum acc;
  for (std::size_t k = 0; k < got.size(); ++k) acc.add(std::abs(got[k] - want[k]));
  return acc.value();
}

/// Sums over the row index of a row-major n x m block, one per column.
inline void column_sums(std::span<const double> block, std::size_t n, std::size_t m, std::vector<double>& out,
                        std::vector<ExactSum>& acc) {
  acc.assign(m, ExactSum{});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) acc[j].add(block[i * m + j]);
  out.resize(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = acc[j].value();
}

inline void row_sums(std::span<const double> block, std::size_t n, std::size_t m, std::vector<double>& out) {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += block[i * m + j];
    out[i] = acc;
  }
}

inline bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

inline double log_sum_exp(std::span<const double> xs) {
  const double hi = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(hi)) return hi;
  ExactSum acc;
  for (double x : xs) acc.add(std::exp(x - hi));
  return hi + std::log(acc.value());
}

/// Moves an approximately feasible plan onto the transport polytope: scale
/// rows and columns down to their targets, then hand the missing mass out as
/// the outer product of the row and column deficits.
inline void round_to_marginals(std::vector<double>& plan, std::span<const double> r, std::span<const double> c) {
  const std::size_t n = r.size();
  const std::size_t m = c.size();
  std::vector<double> rows, cols;
  std::vector<ExactSum> acc;
  row_sums(plan, n, m, rows);
  for (std::size_t i = 0; i < n; ++i)
    if (rows[i] > r[i])
      for (std::size_t j = 0; j < m; ++j) plan[i * m + j] *= r[i] / rows[i];
  column_sums(plan, n, m, cols, acc);
  for (std::size_t j = 0; j < m; ++j)
    if (cols[j] > c[j])
      for (std::size_t i = 0; i < n; ++i) plan[i * m + j] *= c[j] / cols[j];

  row_sums(plan, n, m, rows);
  column_sums(plan, n, m, cols, acc);
  ExactSum total;
  for (std::size_t i = 0; i < n; ++i) total.add(rows[i] = std::max(r[i] - rows[i], 0.0));
  for (std::size_t j = 0; j < m; ++j) cols[j] = std::max(c[j] - cols[j], 0.0);
  const double missing = total.value();
  if (!(missing > 0.0)) return;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) plan[i * m + j] += rows[i] * cols[j] / missing;
}

struct SolveState {
  std::vector<double> plan;  // active block, row-major
  bool converged = false;
  int iterations = 0;
  double error = 0.0;
};

inline SolveState solve_kernel(const ActiveProblem& p, std::span<const double> kernel, const SolverConfig& cfg) {
  const std::size_t n = p.n();
  const std::size_t m = p.m();
  std::vector<double> u(n, 1.0), v(m, 1.0), ktu(m), rows(n), cols(m), block(n * m);
  std::vector<ExactSum> acc;
  SolveState s;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += kernel[i * m + j] * v[j];
      u[i] = p.r[i] / acc;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) block[i * m + j] = kernel[i * m + j] * u[i];
    column_sums(block, n, m, ktu, acc);
    for (std::size_t j = 0; j < m; ++j) v[j] = p.c[j] / ktu[j];
    if (!all_finite(u) || !all_finite(v))
      raise(ErrorCode::NumericalBlowup, "Sinkhorn scaling became non-finite at iteration " + std::to_string(k) +
                                            "; raise lambda or use the log domain");

    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) block[i * m + j] = u[i] * kernel[i * m + j] * v[j];
    row_sums(block, n, m, rows);
    column_sums(block, n, m, cols, acc);
    s.iterations = k;
    s.error = std::max(l1_gap(rows, p.r), l1_gap(cols, p.c));
    if (s.error < cfg.tol) {
      s.converged = true;
      break;
    }
  }

  s.plan.resize(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) s.plan[i * m + j] = u[i] * kernel[i * m + j] * v[j];
  return s;
}

// Log-domain iteration on potentials f, g (cost units):
//   f_i = lambda * (log r_i - LSE_j((g_j - C_ij) / lambda))
//   g_j = lambda * (log c_j - LSE_i((f_i - C_ij) / lambda))
// When lambda is small against the cost spread, the potentials are first
// warm-started along lambda_s = spread, spread/2, ... down to lambda; each
// stage shares the iteration budget. The fixed point is unchanged.
inline SolveState solve_log(const ActiveProblem& p, const SolverConfig& cfg) {
  const std::size_t n = p.n();
  const std::size_t m = p.m();
  std::vector<double> f(n, 0.0), g(m, 0.0), log_r(n), log_c(m), scratch(std::max(n, m));
  std::vector<double> rows(n), cols(m);
  std::vector<ExactSum> acc;
  for (std::size_t i = 0; i < n; ++i) log_r[i] = std::log(p.r[i]);
  for (std::size_t j = 0; j < m; ++j) log_c[j] = std::log(p.c[j]);
  SolveState s;
  s.plan.resize(n * m);

  auto sweep = [&](double lam) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) scratch[j] = (g[j] - p.cost[i * m + j]) / lam;
      f[i] = lam * (log_r[i] - log_sum_exp({scratch.data(), m}));
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) scratch[i] = (f[i] - p.cost[i * m + j]) / lam;
      g[j] = lam * (log_c[j] - log_sum_exp({scratch.data(), n}));
    }
    if (!all_finite(f) || !all_finite(g))
      raise(ErrorCode::NumericalBlowup, "log-domain potentials became non-finite at iteration " +
                                            std::to_string(s.iterations));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) s.plan[i * m + j] = std::exp((f[i] + g[j] - p.cost[i * m + j]) / lam);
    row_sums(s.plan, n, m, rows);
    column_sums(s.plan, n, m, cols, acc);
    ++s.iterations;
    s.error = std::max(l1_gap(rows, p.r), l1_gap(cols, p.c));
  };

  const auto [lo, hi] = std::minmax_element(p.cost.begin(), p.cost.end());
  const double spread = *hi - *lo;
  constexpr double kStageShrink = 0.5;
  constexpr int kStageIters = 50;
  for (double lam = spread; lam > cfg.lambda && s.iterations < cfg.max_iters / 2; lam *= kStageShrink)
    for (int k = 0; k < kStageIters && s.iterations < cfg.max_iters / 2; ++k) {
      sweep(lam);
      if (s.error < cfg.tol) break;
    }

  while (s.iterations < cfg.max_iters) {
    sweep(cfg.lambda);
    if (s.error < cfg.tol) {
      s.converged = true;
      break;
    }
  }
  return s;
}

}  // namespace detail

/// Entropic OT between marginals r and c under `cost`:
///   T = diag(u) exp(-C / lambda) diag(v),
/// with u and v alternately rescaled to match r and c. Rows (columns) with
/// zero mass never enter the scaling and come back as exact zeros. Stops once
/// both marginal L1 violations are below cfg.tol, or after cfg.max_iters.
/// The scaled plan is then rounded onto the feasible set, moving at most
/// marginal_error of mass, so its cost never undercuts the true optimum even
/// when the iteration budget runs out.
[[nodiscard]] inline TransportPlan sinkhorn(const CostMatrix& cost, const Marginal& r, const Marginal& c,
                                            const SolverConfig& cfg = {}) {
  cfg.validate();
  if (cost.rows() != r.size() || cost.cols() != c.size())
    raise(ErrorCode::ShapeMismatch, "cost is " + std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()) +
                                        " but marginals have sizes " + std::to_string(r.size()) + " and " +
                                        std::to_string(c.size()));
  if (!detail::all_finite(cost.data())) raise(ErrorCode::InvalidArgument, "cost matrix has non-finite entries");

  const detail::ActiveProblem p = detail::restrict_to_support(cost, r, c);

  bool use_log = cfg.domain == SinkhornDomain::Log;
  std::vector<double> kernel;
  if (!use_log) {
    kernel.resize(p.cost.size());
    for (std::size_t k = 0; k < kernel.size(); ++k) kernel[k] = std::exp(-p.cost[k] / cfg.lambda);
    const bool underflow = std::any_of(kernel.begin(), kernel.end(), [](double x) { return x == 0.0; });
    if (underflow && cfg.domain == SinkhornDomain::Auto) use_log = true;
  }

  detail::SolveState s = use_log ? detail::solve_log(p, cfg) : detail::solve_kernel(p, kernel, cfg);
  detail::round_to_marginals(s.plan, p.r, p.c);

  TransportPlan out;
  out.entries = PlanMatrix(cost.rows(), cost.cols());
  for (std::size_t a = 0; a < p.n(); ++a)
    for (std::size_t b = 0; b < p.m(); ++b) out.entries(p.rows[a], p.cols[b]) = s.plan[a * p.m() + b];
  out.converged = s.converged;
  out.iterations_used = s.iterations;
  out.log_domain = use_log;
  out.marginal_error = s.error;
  return out;
}

}  // namespace lazsl
