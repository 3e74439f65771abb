#include "flexctl/riccati.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "flexctl/error.hpp"

namespace flexctl {

namespace {

double tolerance_for(const MatrixXd& p) { return 1e-8 * (1.0 + p.norm()); }

MatrixXd innovation_inverse(const MatrixXd& c, const MatrixXd& r, const MatrixXd& p) {
  const MatrixXd s = symmetrize(c * p * c.transpose() + r);
  Eigen::LDLT<MatrixXd> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw Error(ErrorCode::IllConditioned, "innovation covariance is not positive definite");
  }
  const VectorXd d = ldlt.vectorD().cwiseAbs();
  if (d.minCoeff() <= 1e-14 * d.maxCoeff()) {
    throw Error(ErrorCode::IllConditioned, "innovation covariance is numerically singular");
  }
  return ldlt.solve(MatrixXd::Identity(s.rows(), s.cols()));
}

MatrixXd gain(const MatrixXd& a, const MatrixXd& c, const MatrixXd& r, const MatrixXd& p) {
  return a * p * c.transpose() * innovation_inverse(c, r, p);
}

}  // namespace

double dare_residual(const MatrixXd& a, const MatrixXd& c, const MatrixXd& q, const MatrixXd& r,
                     const MatrixXd& p) {
  const MatrixXd apc = a * p * c.transpose();
  const MatrixXd res = a * p * a.transpose() - apc * innovation_inverse(c, r, p) * apc.transpose() + q - p;
  return res.norm();
}

MatrixXd solve_stein(const MatrixXd& a, const MatrixXd& q) {
  MatrixXd x = q;
  MatrixXd ak = a;
  for (int k = 0; k < 64; ++k) {
    const MatrixXd inc = ak * x * ak.transpose();
    x += inc;
    x = symmetrize(x);
    ak = ak * ak;
    if (!x.allFinite()) break;
    if (inc.norm() <= std::numeric_limits<double>::epsilon() * x.norm() || ak.norm() == 0.0) return x;
  }
  if (!x.allFinite()) throw Error(ErrorCode::NotDetectable, "Stein iteration diverged");
  return x;
}

DareSolution solve_dare(const MatrixXd& a, const MatrixXd& c, const MatrixXd& q, const MatrixXd& r,
                        const DareOptions& opts) {
  const Index n = a.rows();
  const Index m = c.rows();
  if (a.cols() != n || c.cols() != n || q.rows() != n || q.cols() != n || r.rows() != m || r.cols() != m) {
    throw Error(ErrorCode::DimensionMismatch, "solve_dare: inconsistent dimensions");
  }
  if (!a.allFinite() || !c.allFinite() || !q.allFinite() || !r.allFinite()) {
    throw Error(ErrorCode::NonFinite, "solve_dare: non-finite input");
  }
  if (!is_symmetric(r, 1e-9) || !is_symmetric(q, 1e-9)) {
    throw Error(ErrorCode::NonSymmetric, "solve_dare: Q and R must be symmetric");
  }
  Eigen::LLT<MatrixXd> rllt(symmetrize(r));
  if (rllt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "Rv must be positive definite");

  const MatrixXd eye = MatrixXd::Identity(n, n);
  const MatrixXd rinv = rllt.solve(MatrixXd::Identity(m, m));

  // Doubling on the dual (control-form) equation with A -> A', B -> C'.
  MatrixXd ak = a.transpose();
  MatrixXd gk = symmetrize(c.transpose() * rinv * c);
  MatrixXd hk = symmetrize(q);
  DareSolution sol;
  bool converged = false;
  for (int k = 0; k < opts.max_iterations; ++k) {
    Eigen::PartialPivLU<MatrixXd> lu(eye + gk * hk);
    const MatrixXd w_a = lu.solve(ak);
    const MatrixXd w_g = lu.solve(gk);
    const MatrixXd h_next = symmetrize(hk + ak.transpose() * hk * w_a);
    gk = symmetrize(gk + ak * w_g * ak.transpose());
    ak = ak * w_a;
    const double inc = (h_next - hk).norm();
    hk = h_next;
    sol.iterations = k + 1;
    if (!hk.allFinite() || !gk.allFinite() || !ak.allFinite()) break;
    if (inc <= opts.tolerance * std::max(hk.norm(), std::numeric_limits<double>::min())) {
      converged = true;
      break;
    }
  }
  if (!hk.allFinite()) throw Error(ErrorCode::NotDetectable, "doubling iteration diverged");

  MatrixXd p = hk;
  double res = dare_residual(a, c, q, r, p);
  // Newton refinement, accepted only while it improves the residual.
  for (int k = 0; k < opts.max_newton_steps && (res > tolerance_for(p) || !converged); ++k) {
    const MatrixXd l = gain(a, c, r, p);
    const MatrixXd acl = a - l * c;
    if (spectral_radius(acl) >= 1.0) break;
    const MatrixXd p_next = solve_stein(acl, symmetrize(q + l * r * l.transpose()));
    const double res_next = dare_residual(a, c, q, r, p_next);
    if (!(res_next < res)) break;
    p = p_next;
    res = res_next;
    ++sol.newton_steps;
    converged = converged || res <= tolerance_for(p);
  }

  sol.p = p;
  sol.l = gain(a, c, r, p);
  sol.residual = res;
  sol.closed_loop_radius = spectral_radius(a - sol.l * c);
  if (!(sol.closed_loop_radius < 1.0)) {
    throw Error(ErrorCode::NotDetectable,
                "no stabilizing solution (closed-loop radius " + std::to_string(sol.closed_loop_radius) + ")");
  }
  if (res > tolerance_for(p)) {
    throw Error(ErrorCode::IllConditioned, "Riccati residual " + std::to_string(res) + " above tolerance");
  }
  return sol;
}

}  // namespace flexctl
