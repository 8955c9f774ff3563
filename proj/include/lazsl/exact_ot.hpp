#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lazsl/core.hpp"
#include "lazsl/error.hpp"
#include "lazsl/sinkhorn.hpp"

namespace lazsl {

struct ExactOtResult {
  TransportPlan plan;
  double value = 0.0;
};

namespace detail {

// Dense tableau simplex for  min c.x  s.t.  A x = b, x >= 0, b >= 0.
// Bland's rule on both entering and leaving choices, so degenerate
// transportation vertices cannot cycle.
class TableauSimplex {
 public:
  static constexpr double kPivotEps = 1e-12;

  TableauSimplex(std::vector<std::vector<double>> a, std::vector<double> b)
      : a_(std::move(a)), b_(std::move(b)), structural_(a_.front().size()) {
    const std::size_t rows = a_.size();
    for (std::size_t k = 0; k < rows; ++k) {
      a_[k].resize(structural_ + rows, 0.0);
      a_[k][structural_ + k] = 1.0;
      basis_.push_back(structural_ + k);
    }
  }

  // Returns the optimal structural solution or raises if infeasible.
  std::vector<double> solve(const std::vector<double>& cost) {
    const std::size_t total = a_.front().size();
    std::vector<double> phase1(total, 0.0);
    for (std::size_t j = structural_; j < total; ++j) phase1[j] = 1.0;
    run(phase1, total);

    double infeasibility = 0.0;
    for (std::size_t k = 0; k < basis_.size(); ++k)
      if (basis_[k] >= structural_) infeasibility += b_[k];
    if (infeasibility > 1e-9) raise(ErrorCode::InvalidArgument, "transportation problem is infeasible");

    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are redundant (the marginal equalities are rank N+M-1).
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      if (basis_[k] < structural_) continue;
      for (std::size_t j = 0; j < structural_; ++j)
        if (std::abs(a_[k][j]) > kPivotEps) {
          pivot(k, j);
          break;
        }
    }

    std::vector<double> phase2(cost);
    phase2.resize(total, 0.0);
    run(phase2, structural_);

    std::vector<double> x(structural_, 0.0);
    for (std::size_t k = 0; k < basis_.size(); ++k)
      if (basis_[k] < structural_) x[basis_[k]] = std::max(b_[k], 0.0);
    return x;
  }

  [[nodiscard]] int pivots() const noexcept { return pivots_; }

 private:
  // Columns >= `allowed` may not enter the basis.
  void run(const std::vector<double>& cost, std::size_t allowed) {
    const std::size_t rows = a_.size();
    for (;;) {
      std::size_t entering = allowed;
      for (std::size_t j = 0; j < allowed; ++j) {
        double reduced = cost[j];
        for (std::size_t k = 0; k < rows; ++k) reduced -= cost[basis_[k]] * a_[k][j];
        if (reduced < -kPivotEps) {
          entering = j;
          break;
        }
      }
      if (entering == allowed) return;

      std::size_t leaving = rows;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < rows; ++k) {
        if (a_[k][entering] <= kPivotEps) continue;
        const double ratio = b_[k] / a_[k][entering];
        if (ratio < best - kPivotEps) {
          best = ratio;
          leaving = k;
        } else if (ratio <= best + kPivotEps && basis_[k] < basis_[leaving]) {
          leaving = k;
        }
      }
      if (leaving == rows) raise(ErrorCode::NumericalBlowup, "transportation LP reported unbounded");
      pivot(leaving, entering);
    }
  }

  void pivot(std::size_t row, std::size_t col) {
    const double p = a_[row][col];
    for (double& x : a_[row]) x /= p;
    b_[row] /= p;
    for (std::size_t k = 0; k < a_.size(); ++k) {
      if (k == row) continue;
      const double f = a_[k][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < a_[k].size(); ++j) a_[k][j] -= f * a_[row][j];
      b_[k] -= f * b_[row];
    }
    basis_[row] = col;
    ++pivots_;
  }

  std::vector<std::vector<double>> a_;
  std::vector<double> b_;
  std::size_t structural_;
  std::vector<std::size_t> basis_;
  int pivots_ = 0;
};

}  // namespace detail

inline constexpr std::size_t kExactOtMaxCells = 64;

/// Exact minimizer of <T, cost> over plans with row sums r and column sums c.
/// Intended as a verification oracle, so it is limited to N*M <= 64.
[[nodiscard]] inline ExactOtResult exact_ot(const CostMatrix& cost, const Marginal& r, const Marginal& c) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  if (n != r.size() || m != c.size()) raise(ErrorCode::ShapeMismatch, "cost shape does not match marginals");
  if (n * m > kExactOtMaxCells)
    raise(ErrorCode::TooLarge, std::to_string(n) + "x" + std::to_string(m) + " exceeds " +
                                   std::to_string(kExactOtMaxCells) + " cells");

  std::vector<std::vector<double>> a(n + m, std::vector<double>(n * m, 0.0));
  std::vector<double> b(n + m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) a[i][i * m + j] = 1.0;
    b[i] = r[i];
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) a[n + j][i * m + j] = 1.0;
    b[n + j] = c[j];
  }

  detail::TableauSimplex lp(std::move(a), std::move(b));
  const std::vector<double> costs(cost.data().begin(), cost.data().end());
  std::vector<double> x = lp.solve(costs);

  ExactOtResult out;
  out.plan.entries = PlanMatrix(n, m, std::move(x));
  out.plan.converged = true;
  out.plan.iterations_used = lp.pivots();
  out.plan.marginal_error = marginal_violation(out.plan.entries, r, c);
  out.value = transport_cost(out.plan, cost);
  return out;
}

}  // namespace lazsl
