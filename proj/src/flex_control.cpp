#include "flexctl/flex_control.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "flexctl/error.hpp"

namespace flexctl {

void ModalTargets::validate(Index n_ctl) const {
  if (zeta_star.size() != n_ctl || omega_star.size() != n_ctl) {
    throw Error(ErrorCode::DimensionMismatch, "one damping and frequency target per controlled mode");
  }
  for (Index i = 0; i < n_ctl; ++i) {
    if (!(zeta_star(i) > 0.0 && zeta_star(i) < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "target damping ratio must lie in (0, 1)");
    }
    if (!(omega_star(i) > 0.0) || !std::isfinite(omega_star(i))) {
      throw Error(ErrorCode::InvalidArgument, "target frequency must be positive");
    }
  }
}

MatrixXd FlexGains::k_fm() const {
  MatrixXd out(ks.rows(), ks.cols() + kd.cols());
  out << ks, kd;
  return out;
}

FlexGains design_gains(const MatrixXd& b_ctl, const VectorXd& omega, const VectorXd& zeta, const ModalTargets& targets,
                       double max_condition) {
  const Index n = b_ctl.rows();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "no controlled modes");
  if (omega.size() != n || zeta.size() != n) throw Error(ErrorCode::DimensionMismatch, "modal parameter count");
  targets.validate(n);
  const Pseudoinverse pi = pseudoinverse(b_ctl);
  if (pi.rank < n || pi.condition > max_condition) {
    throw Error(ErrorCode::RankDeficientActuation,
                "modal actuation of the controlled modes lacks full row rank (condition " +
                    std::to_string(pi.condition) + ")");
  }
  const VectorXd dk = targets.omega_star.array().square() - omega.array().square();
  const VectorXd dd = 2.0 * targets.zeta_star.array() * targets.omega_star.array() -
                      2.0 * zeta.array() * omega.array();
  FlexGains g;
  g.ks = -pi.value * dk.asDiagonal();
  g.kd = -pi.value * dd.asDiagonal();
  g.omega = omega;
  g.zeta = zeta;
  g.targets = targets;
  if (!g.ks.allFinite() || !g.kd.allFinite()) throw Error(ErrorCode::NonFinite, "flexible-mode gains not finite");
  return g;
}

FlexGains design_gains(const DecoupledPlant& plant, const std::vector<Index>& controlled, const ModalTargets& targets,
                       double max_condition) {
  const Index n = static_cast<Index>(controlled.size());
  MatrixXd b(n, plant.b_fm.cols());
  VectorXd w(n);
  VectorXd z(n);
  for (Index j = 0; j < n; ++j) {
    const Index m = controlled[static_cast<std::size_t>(j)];
    if (m < 0 || m >= plant.n_fm()) throw Error(ErrorCode::InvalidArgument, "controlled mode index out of range");
    b.row(j) = plant.b_fm.row(2 * m + 1);
    w(j) = plant.raw.omega(plant.n_rb() + m);
    z(j) = plant.raw.zeta(plant.n_rb() + m);
  }
  FlexGains g = design_gains(b, w, z, targets, max_condition);
  g.controlled = controlled;
  return g;
}

Complex Biquad::response(double omega, double ts) const {
  const Complex zi = std::polar(1.0, -omega * ts);
  return (b0 + b1 * zi + b2 * zi * zi) / (1.0 + a1 * zi + a2 * zi * zi);
}

bool Biquad::stable() const { return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2; }

Complex BandPassDesign::response(double w) const {
  const Complex h = section.response(w, ts);
  return h * h;
}

Complex BandPassDesign::continuous_response(double w) const {
  const Complex s(0.0, w);
  const Complex h = (omega / q) * s / (s * s + (omega / q) * s + omega * omega);
  return h * h;
}

BandPassDesign make_bandpass(double omega, double q, double ts) {
  if (!(ts > 0.0)) throw Error(ErrorCode::InvalidArgument, "Ts must be positive");
  if (!(omega > 0.0) || !(q > 0.0)) throw Error(ErrorCode::InvalidArgument, "band-pass needs positive center and Q");
  if (omega * ts >= std::numbers::pi) throw Error(ErrorCode::AboveNyquist, "band-pass center above Nyquist");
  BandPassDesign d;
  d.omega = omega;
  d.q = q;
  d.ts = ts;
  const double c = omega / std::tan(0.5 * omega * ts);
  const double bw = omega / q;
  const double a0 = c * c + bw * c + omega * omega;
  d.section.b0 = bw * c / a0;
  d.section.b1 = 0.0;
  d.section.b2 = -d.section.b0;
  d.section.a1 = 2.0 * (omega * omega - c * c) / a0;
  d.section.a2 = (c * c - bw * c + omega * omega) / a0;
  if (!d.section.stable()) throw Error(ErrorCode::Unstable, "discretized band-pass is unstable");
  return d;
}

FlexController::FlexController(FlexGains gains, std::vector<BandPassDesign> filters, bool bypass_filter)
    : gains_(std::move(gains)), designs_(std::move(filters)), bypass_(bypass_filter) {
  if (!bypass_ && static_cast<Index>(designs_.size()) != gains_.modes()) {
    throw Error(ErrorCode::DimensionMismatch, "one band-pass per controlled mode");
  }
  for (const auto& d : designs_) {
    pos_.emplace_back(d);
    vel_.emplace_back(d);
  }
  u_ = VectorXd::Zero(gains_.inputs());
}

const VectorXd& FlexController::step(const VectorXd& estimate) {
  const Index n = gains_.modes();
  if (estimate.size() != 2 * n) throw Error(ErrorCode::DimensionMismatch, "flex controller estimate size");
  u_.setZero();
  for (Index j = 0; j < n; ++j) {
    double q = estimate(2 * j);
    double dq = estimate(2 * j + 1);
    if (!bypass_) {
      q = pos_[static_cast<std::size_t>(j)].step(q);
      dq = vel_[static_cast<std::size_t>(j)].step(dq);
    }
    u_.noalias() += gains_.ks.col(j) * q;
    u_.noalias() += gains_.kd.col(j) * dq;
  }
  return u_;
}

void FlexController::reset() {
  for (auto& f : pos_) f.reset();
  for (auto& f : vel_) f.reset();
  u_.setZero();
}

}  // namespace flexctl
