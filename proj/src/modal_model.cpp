#include "flexctl/modal_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "flexctl/error.hpp"

namespace flexctl {

namespace {

void require_square(const MatrixXd& m, Index n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, std::string(name) + " must be " + std::to_string(n) + "x" +
                                                  std::to_string(n));
  }
}

double min_eigenvalue(const MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::EigSolveFailure, "symmetric eigenvalue solve failed");
  return es.eigenvalues()(0);
}

// Rotates an M-orthonormal basis of a degenerate eigenspace onto the
// coordinate axes it projects onto most strongly, so that the result does
// not depend on solver internals and ties follow the original index order.
MatrixXd canonical_cluster_basis(const MatrixXd& vc, const MatrixXd& m) {
  const Index k = vc.cols();
  const MatrixXd proj = (m * vc).transpose();  // k x n
  Eigen::ColPivHouseholderQR<MatrixXd> qr(proj);
  std::vector<Index> axes;
  for (Index i = 0; i < k; ++i) axes.push_back(qr.colsPermutation().indices()(i));
  std::sort(axes.begin(), axes.end());
  MatrixXd g(k, k);
  for (Index j = 0; j < k; ++j) g.col(j) = proj.col(axes[static_cast<std::size_t>(j)]);
  Eigen::JacobiSVD<MatrixXd> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const MatrixXd r = svd.matrixU() * svd.matrixV().transpose();
  return vc * r;
}

void fix_sign(Eigen::Ref<VectorXd> v) {
  Index imax = 0;
  double best = -1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > best * (1.0 + 1e-12)) {
      best = std::abs(v(i));
      imax = i;
    }
  }
  if (v(imax) < 0.0) v = -v;
}

PositionPolynomial scatter_columns(const PositionPolynomial& src, Index total, Index stride, Index offset) {
  MatrixXd s = MatrixXd::Zero(src.cols(), total);
  for (Index i = 0; i < src.cols(); ++i) s(i, stride * i + offset) = 1.0;
  return src * s;
}

}  // namespace

void MechModel::validate(const ModelTolerances& tol) const {
  const Index n = n_x();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "model has no coordinates");
  require_square(M, n, "M");
  require_square(D, n, "D");
  require_square(K, n, "K");
  if (Phi_a.rows() != n) throw Error(ErrorCode::DimensionMismatch, "Phi_a must have n_x rows");
  if (Phi_s.cols() != n) throw Error(ErrorCode::DimensionMismatch, "Phi_s must have n_x columns");
  if (!M.allFinite() || !D.allFinite() || !K.allFinite() || !Phi_a.allFinite() || !Phi_s.all_finite()) {
    throw Error(ErrorCode::NonFinite, "model matrices contain non-finite entries");
  }
  for (auto [m, name] : {std::pair{&M, "M"}, std::pair{&D, "D"}, std::pair{&K, "K"}}) {
    if (!is_symmetric(*m, tol.symmetry)) throw Error(ErrorCode::NonSymmetric, std::string(name) + " is not symmetric");
  }
  Eigen::LLT<MatrixXd> llt(symmetrize(M));
  if (llt.info() != Eigen::Success || min_eigenvalue(symmetrize(M)) <= 0.0) {
    throw Error(ErrorCode::NotPositiveDefinite, "M must be positive definite");
  }
  for (auto [m, name] : {std::pair{&D, "D"}, std::pair{&K, "K"}}) {
    const double scale = std::max(m->norm(), 1e-300);
    if (min_eigenvalue(symmetrize(*m)) < -1e3 * std::numeric_limits<double>::epsilon() * scale * static_cast<double>(n)) {
      throw Error(ErrorCode::NotPositiveDefinite, std::string(name) + " must be positive semidefinite");
    }
  }
  workspace.validate();
}

ModalForm to_modal(const MechModel& model, const ModelTolerances& tol) {
  model.validate(tol);
  const Index n = model.n_x();
  const MatrixXd M = symmetrize(model.M);
  const MatrixXd K = symmetrize(model.K);
  const MatrixXd D = symmetrize(model.D);

  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(K, M, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success) throw Error(ErrorCode::EigSolveFailure, "generalized eigenproblem failed");
  VectorXd lambda = ges.eigenvalues();
  MatrixXd v = ges.eigenvectors();

  // Eigen returns ascending eigenvalues; reorder defensively with a stable sort.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return lambda(a) < lambda(b); });
  VectorXd lam_sorted(n);
  MatrixXd v_sorted(n, n);
  for (Index i = 0; i < n; ++i) {
    lam_sorted(i) = lambda(order[static_cast<std::size_t>(i)]);
    v_sorted.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }

  const double lam_max = std::max(lam_sorted.cwiseAbs().maxCoeff(), 0.0);
  const double lam_floor = 64.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon() * lam_max;
  VectorXd omega(n);
  for (Index i = 0; i < n; ++i) {
    const double l = lam_sorted(i);
    omega(i) = (l <= lam_floor) ? 0.0 : std::sqrt(l);
    if (omega(i) < tol.rigid_omega) omega(i) = 0.0;
  }

  // Canonical bases for repeated eigenvalues.
  for (Index i = 0; i < n;) {
    Index j = i + 1;
    while (j < n) {
      const bool both_rigid = omega(i) == 0.0 && omega(j) == 0.0;
      const bool equal = omega(i) > 0.0 && std::abs(omega(j) - omega(i)) <= 1e-9 * omega(j);
      if (!both_rigid && !equal) break;
      ++j;
    }
    if (j - i > 1) {
      v_sorted.middleCols(i, j - i) = canonical_cluster_basis(v_sorted.middleCols(i, j - i), M);
    } else {
      fix_sign(v_sorted.col(i));
    }
    i = j;
  }

  ModalForm out;
  out.omega = omega;
  out.vtilde = v_sorted;
  out.n_rigid = (omega.array() == 0.0).count();
  out.workspace = model.workspace;

  const MatrixXd mm = v_sorted.transpose() * M * v_sorted;
  const MatrixXd km = v_sorted.transpose() * K * v_sorted;
  const MatrixXd eye = MatrixXd::Identity(n, n);
  const MatrixXd om2 = omega.array().square().matrix().asDiagonal();
  if ((mm - eye).norm() > 1e-8 * std::sqrt(static_cast<double>(n)) ||
      (km - om2).norm() > 1e-8 * std::max(km.norm(), 1e-300) + lam_floor) {
    throw Error(ErrorCode::EigSolveFailure, "eigenvectors fail the mass/stiffness normalization check");
  }

  const MatrixXd dm = v_sorted.transpose() * D * v_sorted;
  const double diag_norm = dm.diagonal().norm();
  const double off_norm = std::sqrt(std::max(dm.squaredNorm() - dm.diagonal().squaredNorm(), 0.0));
  if (off_norm > tol.damping_offdiag * std::max(diag_norm, 1e-300) && off_norm > 0.0) {
    throw Error(ErrorCode::NonProportionalDamping,
                "modal damping has off-diagonal mass " + std::to_string(off_norm / std::max(diag_norm, 1e-300)));
  }
  out.zeta = VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (omega(i) > 0.0) out.zeta(i) = dm(i, i) / (2.0 * omega(i));
  }
  out.b_modal = v_sorted.transpose() * model.Phi_a;
  out.c_modal = model.Phi_s * v_sorted;
  return out;
}

MatrixXd mode_block(double omega, double zeta) {
  MatrixXd a(2, 2);
  a << 0.0, 1.0, -omega * omega, -2.0 * zeta * omega;
  return a;
}

MatrixXd position_selector(Index n) {
  MatrixXd s = MatrixXd::Zero(n, 2 * n);
  for (Index i = 0; i < n; ++i) s(i, 2 * i) = 1.0;
  return s;
}

MatrixXd velocity_selector(Index n) {
  MatrixXd s = MatrixXd::Zero(n, 2 * n);
  for (Index i = 0; i < n; ++i) s(i, 2 * i + 1) = 1.0;
  return s;
}

MatrixXd PartitionedLpvPlant::a() const {
  const std::array<MatrixXd, 2> blocks{a_rb, a_fm};
  return block_diagonal(blocks);
}

MatrixXd PartitionedLpvPlant::b() const {
  MatrixXd out(b_rb.rows() + b_fm.rows(), b_rb.cols());
  out << b_rb, b_fm;
  return out;
}

PositionPolynomial PartitionedLpvPlant::c() const {
  // Horizontal concatenation through column placement matrices.
  MatrixXd s_rb = MatrixXd::Zero(c_rb.cols(), states());
  s_rb.leftCols(c_rb.cols()).setIdentity();
  MatrixXd s_fm = MatrixXd::Zero(c_fm.cols(), states());
  s_fm.rightCols(c_fm.cols()).setIdentity();
  return c_rb * s_rb + c_fm * s_fm;
}

PartitionedLpvPlant group_and_partition(const ModalForm& modal) {
  const Index n = modal.modes();
  const Index nr = modal.n_rigid;
  const Index nf = n - nr;
  for (Index i = 0; i < nr; ++i) {
    if (modal.omega(i) != 0.0) throw Error(ErrorCode::InvalidArgument, "rigid modes must lead the modal ordering");
  }
  PartitionedLpvPlant out;
  out.n_rb = nr;
  out.n_fm = nf;
  out.omega = modal.omega;
  out.zeta = modal.zeta;
  out.workspace = modal.workspace;
  const Index nu = modal.b_modal.cols();

  std::vector<MatrixXd> rb_blocks;
  std::vector<MatrixXd> fm_blocks;
  for (Index i = 0; i < nr; ++i) rb_blocks.push_back(mode_block(0.0, 0.0));
  for (Index i = nr; i < n; ++i) fm_blocks.push_back(mode_block(modal.omega(i), modal.zeta(i)));
  out.a_rb = block_diagonal(rb_blocks);
  out.a_fm = block_diagonal(fm_blocks);

  out.b_rb = MatrixXd::Zero(2 * nr, nu);
  out.b_fm = MatrixXd::Zero(2 * nf, nu);
  for (Index i = 0; i < nr; ++i) out.b_rb.row(2 * i + 1) = modal.b_modal.row(i);
  for (Index i = 0; i < nf; ++i) out.b_fm.row(2 * i + 1) = modal.b_modal.row(nr + i);

  const PositionPolynomial grouped = scatter_columns(modal.c_modal, 2 * n, 2, 0);
  out.c_rb = grouped.block(0, 0, grouped.rows(), 2 * nr);
  out.c_fm = grouped.block(0, 2 * nr, grouped.rows(), 2 * nf);
  out.rigid_shapes = modal.vtilde.topLeftCorner(nr, nr);
  return out;
}

OutputDecoupler::OutputDecoupler(PositionPolynomial c_rb_pos, double max_condition)
    : c_rb_pos_(std::move(c_rb_pos)), max_condition_(max_condition) {
  if (c_rb_pos_.rows() == c_rb_pos_.cols() && c_rb_pos_.rows() > 0 && c_rb_pos_.rows() <= 6) {
    const PositionPolynomial det = determinant(c_rb_pos_).trimmed();
    const double d0 = det.coefficient(0, 0)(0, 0);
    if (det.degree_x() == 0 && det.degree_y() == 0 && d0 != 0.0 && std::isfinite(d0)) {
      exact_ = (1.0 / d0) * adjugate(c_rb_pos_);
    }
  }
}

MatrixXd OutputDecoupler::evaluate(const SchedulingPoint& p) const {
  if (exact_) return exact_->evaluate(p);
  const Pseudoinverse pi = pseudoinverse(c_rb_pos_.evaluate(p));
  if (pi.rank < c_rb_pos_.cols() || pi.condition > max_condition_) {
    throw Error(ErrorCode::RankDeficient, "C_RB position block is rank deficient or ill-conditioned at (" +
                                              std::to_string(p.qx) + ", " + std::to_string(p.qy) + ")");
  }
  return pi.value;
}

MatrixXd DecoupledPlant::b() const {
  MatrixXd out(b_rb.rows() + b_fm.rows(), b_rb.cols());
  out << b_rb, b_fm;
  return out;
}

MatrixXd DecoupledPlant::c_rb_at(const SchedulingPoint& p) const {
  return t_y.evaluate(p) * raw.c_rb.evaluate(p);
}

MatrixXd DecoupledPlant::c_fm_at(const SchedulingPoint& p) const {
  if (c_fm_poly) return c_fm_poly->evaluate(p);
  return t_y.evaluate(p) * raw.c_fm.evaluate(p);
}

MatrixXd DecoupledPlant::c_at(const SchedulingPoint& p) const {
  const MatrixXd crb = c_rb_at(p);
  const MatrixXd cfm = c_fm_at(p);
  MatrixXd out(crb.rows(), crb.cols() + cfm.cols());
  out << crb, cfm;
  return out;
}

DecoupledPlant decouple(const PartitionedLpvPlant& plant, const ModelTolerances& tol, int grid_n) {
  const Index nr = plant.n_rb;
  if (nr == 0) throw Error(ErrorCode::RankDeficient, "plant has no rigid-body modes to decouple");
  DecoupledPlant out;
  out.raw = plant;

  const MatrixXd b_vel = velocity_selector(nr) * plant.b_rb;
  const Pseudoinverse tu = pseudoinverse(b_vel);
  if (tu.rank < nr || tu.condition > tol.max_condition) {
    throw Error(ErrorCode::RankDeficient, "velocity rows of B_RB lack full row rank (condition " +
                                              std::to_string(tu.condition) + ")");
  }
  out.t_u = tu.value;
  out.input_condition = tu.condition;

  const PositionPolynomial c_pos = plant.c_rb * position_selector(nr).transpose();
  out.t_y = OutputDecoupler(c_pos, tol.max_condition);

  for (const SchedulingPoint& p : plant.workspace.grid(grid_n, grid_n)) {
    const MatrixXd cp = c_pos.evaluate(p);
    const Pseudoinverse pi = pseudoinverse(cp);
    if (pi.rank < nr || pi.condition > tol.max_condition) {
      throw Error(ErrorCode::RankDeficient, "C_RB position block rank deficient at (" + std::to_string(p.qx) +
                                                ", " + std::to_string(p.qy) + ")");
    }
    const MatrixXd check = out.t_y.evaluate(p) * cp;
    if ((check - MatrixXd::Identity(nr, nr)).cwiseAbs().maxCoeff() > 1e-8) {
      throw Error(ErrorCode::RankDeficient, "output decoupling check failed on the workspace grid");
    }
  }

  out.b_rb = plant.b_rb * out.t_u;
  out.b_fm = plant.b_fm * out.t_u;
  if ((velocity_selector(nr) * out.b_rb - MatrixXd::Identity(nr, nr)).cwiseAbs().maxCoeff() > 1e-8) {
    throw Error(ErrorCode::RankDeficient, "input decoupling check failed");
  }
  if (out.t_y.exact()) out.c_fm_poly = (*out.t_y.polynomial()) * plant.c_fm;
  return out;
}

FrozenPlant freeze(const DecoupledPlant& plant, const SchedulingPoint& p, bool allow_extrapolation) {
  if (!allow_extrapolation && !plant.workspace().contains(p)) {
    throw Error(ErrorCode::OutOfWorkspace, "scheduling point (" + std::to_string(p.qx) + ", " +
                                               std::to_string(p.qy) + ") outside the workspace");
  }
  FrozenPlant f;
  f.a = plant.a();
  f.b = plant.b();
  f.c = plant.c_at(p);
  f.d = MatrixXd::Zero(f.c.rows(), f.b.cols());
  f.p = p;
  return f;
}

MatrixXd TruncatedPlant::c_at(const SchedulingPoint& p) const {
  const Index nr = n_rb();
  const MatrixXd cfm = plant.c_fm_at(p);
  MatrixXd out = MatrixXd::Zero(nr, states());
  out.leftCols(2 * nr) = position_selector(nr);
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.middleCols(flex_offset(static_cast<Index>(j)), 2) = cfm.middleCols(2 * keep[j], 2);
  }
  return out;
}

MatrixXd TruncatedPlant::dc_at(const SchedulingPoint& p) const {
  if (dc_poly) return dc_poly->evaluate(p);
  return plant.t_y.evaluate(p) * dc_raw.evaluate(p);
}

TruncatedPlant truncate(const DecoupledPlant& plant, std::vector<Index> keep) {
  const Index nf = plant.n_fm();
  const Index nr = plant.n_rb();
  if (keep.empty()) throw Error(ErrorCode::InvalidArgument, "at least one flexible mode must be retained");
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end()) {
    throw Error(ErrorCode::InvalidArgument, "retained mode list has duplicates");
  }
  for (Index k : keep) {
    if (k < 0 || k >= nf) throw Error(ErrorCode::InvalidArgument, "retained mode index out of range");
  }
  TruncatedPlant t;
  t.plant = plant;
  t.keep = keep;
  for (Index i = 0; i < nf; ++i) {
    if (!std::binary_search(keep.begin(), keep.end(), i)) t.discard.push_back(i);
  }

  std::vector<MatrixXd> blocks;
  blocks.push_back(plant.raw.a_rb);
  for (Index k : keep) blocks.push_back(plant.raw.a_fm.block(2 * k, 2 * k, 2, 2));
  t.a = block_diagonal(blocks);

  const Index ns = t.a.rows();
  t.b = MatrixXd::Zero(ns, nr);
  t.b.topRows(2 * nr) = velocity_selector(nr).transpose();
  for (std::size_t j = 0; j < keep.size(); ++j) {
    t.b.middleRows(t.flex_offset(static_cast<Index>(j)), 2) = plant.b_fm.middleRows(2 * keep[j], 2);
  }

  const Index ny = plant.raw.outputs();
  t.dc_raw = PositionPolynomial(ny, nr, 0, 0);
  for (Index d : t.discard) {
    const double w = plant.raw.omega(nr + d);
    if (!(w > 0.0)) throw Error(ErrorCode::SingularDiscardedBlock, "discarded mode has zero frequency");
    const PositionPolynomial c = plant.raw.c_fm.block(0, 2 * d, ny, 1);
    const MatrixXd b = plant.b_fm.row(2 * d + 1);
    t.dc_raw += (1.0 / (w * w)) * (c * b);
  }
  if (plant.t_y.exact()) t.dc_poly = (*plant.t_y.polynomial()) * t.dc_raw;
  return t;
}

}  // namespace flexctl
