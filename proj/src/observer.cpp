#include "flexctl/observer.hpp"

#include <string>

#include "flexctl/discretize.hpp"
#include "flexctl/error.hpp"

namespace flexctl {

DiscreteModel discretize_observer_model(const TruncatedPlant& plant, double ts) {
  const ZohModel z = zoh_discretize(plant.a, plant.b, ts);
  DiscreteModel m;
  m.a = z.a;
  m.b = z.b;
  m.ts = ts;
  m.n_rb = plant.n_rb();
  m.retained = plant.retained();
  return m;
}

NoiseDesign NoiseDesign::defaults(const DiscreteModel& model, double q_scale, double q_floor, double r_scale) {
  NoiseDesign n;
  const Index ns = model.states();
  n.qw = q_scale * (model.b * model.b.transpose() + q_floor * MatrixXd::Identity(ns, ns));
  n.qw = symmetrize(n.qw);
  n.rv = r_scale * MatrixXd::Identity(model.n_rb, model.n_rb);
  return n;
}

void NoiseDesign::validate(Index states, Index outputs) const {
  if (qw.rows() != states || qw.cols() != states || rv.rows() != outputs || rv.cols() != outputs) {
    throw Error(ErrorCode::DimensionMismatch, "noise covariances do not match the observer model");
  }
  if (!is_symmetric(qw, 1e-9) || !is_symmetric(rv, 1e-9)) {
    throw Error(ErrorCode::NonSymmetric, "noise covariances must be symmetric");
  }
  Eigen::LLT<MatrixXd> llt(rv);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "Rv must be positive definite");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(qw, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) < -1e-12 * std::max(qw.norm(), 1e-300)) {
    throw Error(ErrorCode::NotPositiveDefinite, "Qw must be positive semidefinite");
  }
}

LocalObserver::LocalObserver(SchedulingPoint p, const DiscreteModel& model, MatrixXd c, MatrixXd d, MatrixXd l)
    : p_(p), c_(std::move(c)), d_(std::move(d)), l_(std::move(l)) {
  a_cl_ = model.a - l_ * c_;
  b_u_ = model.b - l_ * d_;
  radius_ = spectral_radius(a_cl_);
  x_ = VectorXd::Zero(model.states());
  scratch_ = x_;
}

const VectorXd& LocalObserver::step(const VectorXd& u, const VectorXd& y) {
  scratch_.noalias() = a_cl_ * x_;
  scratch_.noalias() += b_u_ * u;
  scratch_.noalias() += l_ * y;
  x_.swap(scratch_);
  return x_;
}

void LocalObserver::reset() { x_.setZero(); }

void LocalObserver::set_state(const VectorXd& x) {
  if (x.size() != x_.size()) throw Error(ErrorCode::DimensionMismatch, "observer state size");
  x_ = x;
}

std::vector<SchedulingPoint> ObserverBank::points() const {
  std::vector<SchedulingPoint> pts;
  for (const auto& o : observers) pts.push_back(o.point());
  return pts;
}

void ObserverBank::reset() {
  for (auto& o : observers) o.reset();
}

LocalObserver synthesize_local(const TruncatedPlant& plant, const DiscreteModel& model, const NoiseDesign& noise,
                               const SchedulingPoint& p) {
  const MatrixXd c = plant.c_at(p);
  const MatrixXd d = plant.dc_at(p);
  try {
    const DareSolution sol = solve_dare(model.a, c, noise.qw, noise.rv);
    LocalObserver obs(p, model, c, d, sol.l);
    obs.dare_residual = sol.residual;
    obs.p_norm = sol.p.norm();
    if (!(obs.radius() < 1.0)) throw Error(ErrorCode::NotDetectable, "local observer is not stable");
    return obs;
  } catch (const Error& e) {
    throw Error(e.code(), e.detail() + " at grid point (" + std::to_string(p.qx) + ", " +
                              std::to_string(p.qy) + ")");
  }
}

ObserverBank synthesize_bank(const TruncatedPlant& plant, const std::vector<SchedulingPoint>& grid,
                             const NoiseDesign& noise, const DiscreteModel& model) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "observer grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (grid[i] == grid[j]) throw Error(ErrorCode::InvalidArgument, "observer grid points must be distinct");
    }
    if (!plant.plant.workspace().contains(grid[i])) {
      throw Error(ErrorCode::OutOfWorkspace, "observer grid point outside the workspace");
    }
  }
  noise.validate(model.states(), model.n_rb);
  ObserverBank bank;
  bank.model = model;
  for (const auto& p : grid) bank.observers.push_back(synthesize_local(plant, model, noise, p));
  return bank;
}

}  // namespace flexctl
