#pragma once

#include <span>
#include <vector>

#include "flexctl/linalg.hpp"
#include "flexctl/polynomial.hpp"

namespace flexctl {

// chi(p) = (1, q_x, .., q_x^mx) (x) (1, q_y, .., q_y^my)
struct SpatialBasis {
  int mx = 1;
  int my = 1;

  Index size() const { return static_cast<Index>((mx + 1) * (my + 1)); }
  void validate() const;
};

RowVectorXd eval_chi(const SpatialBasis& basis, const SchedulingPoint& p);

// Chi matrix with one row chi(p_j) per point.
MatrixXd chi_matrix(const SpatialBasis& basis, std::span<const SchedulingPoint> points);

// Stacked system E ~ U F subject to X F = J with F = (Theta_1; ..; Theta_n).
struct RegressionData {
  SpatialBasis basis;
  std::vector<SchedulingPoint> grid;
  MatrixXd e;  // N n_q x 1
  MatrixXd u;  // N n_q x n n_chi
  MatrixXd x;  // n n x n n_chi, row (i, j): chi(p_j) Theta_i
  MatrixXd j;  // n n x 1, delta_ij
  Index samples = 0;
  Index n_q = 0;
};

// local[i] holds observer i's predictions q_i(k+1|k) as columns (n_q x N);
// reference holds the full-model states q(k+1) in the same layout.
RegressionData assemble_regression(const SpatialBasis& basis, const std::vector<SchedulingPoint>& grid,
                                   const std::vector<SchedulingPoint>& schedule, const std::vector<MatrixXd>& local,
                                   const MatrixXd& reference);

// Constraint-only data (no training samples).
RegressionData constraint_system(const SpatialBasis& basis, const std::vector<SchedulingPoint>& grid);

struct LseReport {
  double constraint_residual = 0.0;  // ||X F - J||
  double fit_residual = 0.0;         // ||U F - E||
  Index constraint_rank = 0;
  Index free_dimensions = 0;         // dim ker(X)
  bool infeasible_constraints = false;
  bool regression_active = false;    // training data influenced F
  bool degenerate_regressor = false; // minimum-norm tie-break used
};

struct WeightingScheme {
  SpatialBasis basis;
  std::vector<SchedulingPoint> grid;
  MatrixXd theta;     // n_chi x n, column i = Theta_i
  MatrixXd achieved;  // n x n, (i, j) = W_i(p_j)
  LseReport report;

  Index observers() const { return theta.cols(); }
  RowVectorXd weights(const SchedulingPoint& p) const;
};

inline constexpr double kInfeasibleConstraintTol = 1e-8;

// Minimizes ||U F - E|| over the minimizers of ||X F - J||.
WeightingScheme solve_lse(const RegressionData& data);

// q = sum_i W_i(p) q_i
VectorXd combine(const WeightingScheme& scheme, const SchedulingPoint& p, std::span<const VectorXd> local);
void combine_into(const RowVectorXd& weights, std::span<const VectorXd> local, VectorXd& out);

}  // namespace flexctl
