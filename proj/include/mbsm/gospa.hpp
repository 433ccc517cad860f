#pragma once

#include "mbsm/common.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <utility>
#include <vector>

namespace mbsm {

// ---- Optimal sub-pattern assignment metric ----

namespace detail {

inline constexpr double kBigCost = 1e30;

/// Result of an exact square assignment: matching plus dual potentials.
struct SquareAssignment {
  std::vector<int> row_to_col;
  std::vector<double> row_potential;
  std::vector<double> col_potential;
  double value = 0.0;
};

/// Exact square assignment by shortest augmenting paths with dual potentials.
inline SquareAssignment square_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> min_reduced(static_cast<std::size_t>(n) + 1, kBigCost * 2);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = kBigCost * 2;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                               v[static_cast<std::size_t>(j)];
        if (reduced < min_reduced[static_cast<std::size_t>(j)]) {
          min_reduced[static_cast<std::size_t>(j)] = reduced;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (min_reduced[static_cast<std::size_t>(j)] < delta) {
          delta = min_reduced[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          min_reduced[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  SquareAssignment out;
  out.row_to_col.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (match[static_cast<std::size_t>(j)] > 0) {
      out.row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)]) - 1] = j - 1;
    }
  }
  out.row_potential.assign(u.begin() + 1, u.end());
  out.col_potential.assign(v.begin() + 1, v.end());
  out.value = 0.0;
  for (int i = 0; i < n; ++i) out.value += cost(i, out.row_to_col[static_cast<std::size_t>(i)]);
  return out;
}

/// Embed a rectangular problem with per-element cut costs into a square one.
inline Eigen::MatrixXd augmented_matrix(const Eigen::MatrixXd& cost, double cut_cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  Eigen::MatrixXd square = Eigen::MatrixXd::Constant(n + m, n + m, kBigCost);
  square.topLeftCorner(n, m) = cost;
  for (int i = 0; i < n; ++i) square(i, m + i) = cut_cost;
  for (int j = 0; j < m; ++j) square(n + j, j) = cut_cost;
  square.bottomRightCorner(m, n).setZero();
  return square;
}

}  // namespace detail

/// Exact optimal rectangular assignment with deterministic tie-breaking.
///
/// Minimises the sum of chosen pair costs plus `cut_cost` for every
/// unassigned row and column.  Among cost-optimal solutions the one with the
/// fewest pairs is returned, and among those the lexicographically smallest
/// pair list (pairs sorted by row index).  Indices are zero-based.
[[nodiscard]] inline std::vector<std::pair<int, int>> solve_assignment(const Eigen::MatrixXd& cost,
                                                                       double cut_cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n == 0 || m == 0) return {};
  const Eigen::MatrixXd square = detail::augmented_matrix(cost, cut_cost);
  const int size = n + m;

  const detail::SquareAssignment primal = detail::square_assignment(square);

  double scale = 1.0;
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      if (square(i, j) < detail::kBigCost / 2.0) scale = std::max(scale, std::abs(square(i, j)));
    }
  }
  const double tolerance = 1e-7 * scale;

  // Arcs with zero reduced cost; every cost-optimal assignment lives on them.
  Eigen::MatrixXd counting = Eigen::MatrixXd::Constant(size, size, detail::kBigCost);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      if (square(i, j) >= detail::kBigCost / 2.0) continue;
      const double reduced = square(i, j) - primal.row_potential[static_cast<std::size_t>(i)] -
                             primal.col_potential[static_cast<std::size_t>(j)];
      if (std::abs(reduced) <= tolerance) {
        counting(i, j) = (i < n && j < m) ? 1.0 : 0.0;
      }
    }
  }

  // Fewest real pairs among cost-optimal assignments.
  const double min_pairs = detail::square_assignment(counting).value;

  // Lexicographically smallest pair list: fix each row's choice greedily,
  // keeping the remaining problem completable at the optimal pair count.
  Eigen::MatrixXd constrained = counting;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    std::vector<int> candidates;
    for (int j = 0; j < m; ++j) {
      if (constrained(i, j) < detail::kBigCost / 2.0) candidates.push_back(j);
    }
    candidates.push_back(-1);  // leaving the row unassigned, tried last
    for (const int j : candidates) {
      Eigen::MatrixXd trial = constrained;
      for (int col = 0; col < size; ++col) {
        const bool keep = (j >= 0) ? (col == j) : (col >= m);
        if (!keep) trial(i, col) = detail::kBigCost;
      }
      const double value = detail::square_assignment(trial).value;
      if (value < detail::kBigCost / 2.0 && std::abs(value - min_pairs) < 0.1) {
        constrained = trial;
        if (j >= 0) pairs.emplace_back(i, j);
        break;
      }
    }
  }
  return pairs;
}

/// Parameters of the generalised optimal sub-pattern assignment metric.
struct GospaParameters {
  double c = 80.0;
  double p = 2.0;
  double alpha = 2.0;
};

/// Metric value with its localisation / missed / false decomposition.
struct GospaResult {
  double total = 0.0;
  double sq_total = 0.0;
  double loc_sq = 0.0;
  int missed = 0;
  int false_alarms = 0;
  std::vector<std::pair<int, int>> assignment;
};

/// Metric between a ground-truth set and an estimate set of planar points.
///
/// Only the (p = 2, alpha = 2) configuration is supported; it admits the
/// decomposition sq_total = loc_sq + (c^2/2) * (missed + false).
[[nodiscard]] inline GospaResult gospa(const std::vector<Vec2>& truth,
                                       const std::vector<Vec2>& estimates,
                                       const GospaParameters& params) {
  if (!(params.c > 0.0)) throw std::invalid_argument("gospa: cutoff c must be positive");
  if (params.p != 2.0 || params.alpha != 2.0) {
    throw std::invalid_argument("gospa: only p = 2, alpha = 2 is supported");
  }
  const double sq_cut = params.c * params.c;
  const int n = static_cast<int>(truth.size());
  const int m = static_cast<int>(estimates.size());

  GospaResult result;
  if (n > 0 && m > 0) {
    Eigen::MatrixXd cost(n, m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        cost(i, j) = std::min((truth[static_cast<std::size_t>(i)] -
                               estimates[static_cast<std::size_t>(j)])
                                  .squaredNorm(),
                              sq_cut);
      }
    }
    result.assignment = solve_assignment(cost, sq_cut / 2.0);
  }
  for (const auto& [i, j] : result.assignment) {
    result.loc_sq +=
        (truth[static_cast<std::size_t>(i)] - estimates[static_cast<std::size_t>(j)]).squaredNorm();
  }
  result.missed = n - static_cast<int>(result.assignment.size());
  result.false_alarms = m - static_cast<int>(result.assignment.size());
  result.sq_total = result.loc_sq + sq_cut / 2.0 * (result.missed + result.false_alarms);
  result.total = std::sqrt(result.sq_total);
  return result;
}

/// Root-mean-square of pre-squared metric values (e.g. across runs).
[[nodiscard]] inline double rms_gospa(const std::vector<double>& sq_values) {
  if (sq_values.empty()) return 0.0;
  double sum = 0.0;
  for (const double v : sq_values) sum += v;
  return std::sqrt(sum / static_cast<double>(sq_values.size()));
}

}  // namespace mbsm
