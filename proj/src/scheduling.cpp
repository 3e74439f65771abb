#include "flexctl/scheduling.hpp"

#include <cmath>

#include <Eigen/QR>

#include "flexctl/error.hpp"

namespace flexctl {

void SpatialBasis::validate() const {
  if (mx < 0 || my < 0 || mx > 8 || my > 8) throw Error(ErrorCode::InvalidArgument, "basis exponents must be in 0..8");
}

RowVectorXd eval_chi(const SpatialBasis& basis, const SchedulingPoint& p) {
  RowVectorXd chi(basis.size());
  double px = 1.0;
  for (int v = 0; v <= basis.mx; ++v) {
    double py = 1.0;
    for (int w = 0; w <= basis.my; ++w) {
      chi(v * (basis.my + 1) + w) = px * py;
      py *= p.qy;
    }
    px *= p.qx;
  }
  return chi;
}

MatrixXd chi_matrix(const SpatialBasis& basis, std::span<const SchedulingPoint> points) {
  MatrixXd out(static_cast<Index>(points.size()), basis.size());
  for (std::size_t j = 0; j < points.size(); ++j) out.row(static_cast<Index>(j)) = eval_chi(basis, points[j]);
  return out;
}

RegressionData constraint_system(const SpatialBasis& basis, const std::vector<SchedulingPoint>& grid) {
  basis.validate();
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "weighting grid is empty");
  const Index n = static_cast<Index>(grid.size());
  const Index nc = basis.size();
  RegressionData d;
  d.basis = basis;
  d.grid = grid;
  const MatrixXd chi = chi_matrix(basis, grid);
  d.x = MatrixXd::Zero(n * n, n * nc);
  d.j = MatrixXd::Zero(n * n, 1);
  for (Index i = 0; i < n; ++i) {
    d.x.block(i * n, i * nc, n, nc) = chi;
    d.j(i * n + i, 0) = 1.0;
  }
  d.e = MatrixXd::Zero(0, 1);
  d.u = MatrixXd::Zero(0, n * nc);
  return d;
}

RegressionData assemble_regression(const SpatialBasis& basis, const std::vector<SchedulingPoint>& grid,
                                   const std::vector<SchedulingPoint>& schedule, const std::vector<MatrixXd>& local,
                                   const MatrixXd& reference) {
  RegressionData d = constraint_system(basis, grid);
  const Index n = static_cast<Index>(grid.size());
  if (static_cast<Index>(local.size()) != n) {
    throw Error(ErrorCode::LengthMismatch, "one prediction sequence per grid point is required");
  }
  const Index big_n = static_cast<Index>(schedule.size());
  const Index nq = reference.rows();
  if (reference.cols() != big_n) throw Error(ErrorCode::LengthMismatch, "reference length differs from schedule");
  for (const auto& l : local) {
    if (l.cols() != big_n || l.rows() != nq) {
      throw Error(ErrorCode::LengthMismatch, "local prediction sequence has the wrong shape");
    }
  }
  const Index nc = basis.size();
  d.samples = big_n;
  d.n_q = nq;
  d.e.resize(big_n * nq, 1);
  d.u.resize(big_n * nq, n * nc);
  for (Index k = 0; k < big_n; ++k) {
    const RowVectorXd chi = eval_chi(basis, schedule[static_cast<std::size_t>(k)]);
    d.e.block(k * nq, 0, nq, 1) = reference.col(k);
    for (Index i = 0; i < n; ++i) {
      d.u.block(k * nq, i * nc, nq, nc) = local[static_cast<std::size_t>(i)].col(k) * chi;
    }
  }
  return d;
}

RowVectorXd WeightingScheme::weights(const SchedulingPoint& p) const { return eval_chi(basis, p) * theta; }

WeightingScheme solve_lse(const RegressionData& data) {
  const Index n = static_cast<Index>(data.grid.size());
  const Index nc = data.basis.size();
  if (data.x.rows() == 0) throw Error(ErrorCode::InvalidArgument, "constraint system is empty");
  if (data.u.cols() != data.x.cols() || data.u.rows() != data.e.rows()) {
    throw Error(ErrorCode::LengthMismatch, "regression matrices are inconsistent");
  }

  // Stage 1: minimum-norm least-squares solution of the constraints.
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> xcod(data.x);
  const VectorXd f0 = xcod.solve(data.j);
  const NullSpace ns = null_space(data.x);

  WeightingScheme w;
  w.basis = data.basis;
  w.grid = data.grid;
  w.report.constraint_rank = ns.rank;
  w.report.free_dimensions = ns.basis.cols();

  VectorXd f = f0;
  if (ns.basis.cols() > 0 && data.u.rows() > 0) {
    // Stage 2: fit over the constraint minimizers F0 + N z.
    const MatrixXd un = data.u * ns.basis;
    const VectorXd rhs = data.e.col(0) - data.u * f0;
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> ucod(un);
    const VectorXd z = ucod.solve(rhs);
    f = f0 + ns.basis * z;
    w.report.regression_active = un.norm() > 0.0;
    w.report.degenerate_regressor = ucod.rank() < un.cols();
  } else if (ns.basis.cols() > 0) {
    w.report.degenerate_regressor = true;
  }

  w.theta.resize(nc, n);
  for (Index i = 0; i < n; ++i) w.theta.col(i) = f.segment(i * nc, nc);
  w.report.constraint_residual = (data.x * f - data.j.col(0)).norm();
  w.report.fit_residual = data.u.rows() > 0 ? (data.u * f - data.e.col(0)).norm() : 0.0;
  w.report.infeasible_constraints = w.report.constraint_residual > kInfeasibleConstraintTol;
  const MatrixXd chi = chi_matrix(data.basis, data.grid);
  w.achieved = (chi * w.theta).transpose();
  return w;
}

void combine_into(const RowVectorXd& weights, std::span<const VectorXd> local, VectorXd& out) {
  if (static_cast<Index>(local.size()) != weights.size() || local.empty()) {
    throw Error(ErrorCode::LengthMismatch, "prediction count differs from observer count");
  }
  out.setZero(local[0].size());
  for (std::size_t i = 0; i < local.size(); ++i) out.noalias() += weights(static_cast<Index>(i)) * local[i];
}

VectorXd combine(const WeightingScheme& scheme, const SchedulingPoint& p, std::span<const VectorXd> local) {
  VectorXd out;
  combine_into(scheme.weights(p), local, out);
  return out;
}

}  // namespace flexctl
