#include "flexctl/rigid_body.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "flexctl/error.hpp"

namespace flexctl {

Biquad bilinear_biquad(double n2, double n1, double n0, double d2, double d1, double d0, double ts) {
  const double k = 2.0 / ts;
  const double k2 = k * k;
  const double a0 = d2 * k2 + d1 * k + d0;
  if (a0 == 0.0) throw Error(ErrorCode::InvalidArgument, "degenerate bilinear section");
  Biquad b;
  b.b0 = (n2 * k2 + n1 * k + n0) / a0;
  b.b1 = 2.0 * (n0 - n2 * k2) / a0;
  b.b2 = (n2 * k2 - n1 * k + n0) / a0;
  b.a1 = 2.0 * (d0 - d2 * k2) / a0;
  b.a2 = (d2 * k2 - d1 * k + d0) / a0;
  return b;
}

Complex PidAxisDesign::continuous_response(double w) const {
  const Complex s(0.0, w);
  const Complex lead = (1.0 + s / wz) / (1.0 + s / wp);
  const Complex integ = (s + wi) / s;
  const Complex lp = wlp * wlp / (s * s + 2.0 * zeta_lp * wlp * s + wlp * wlp);
  return k * lead * integ * lp;
}

Complex PidAxisDesign::discrete_response(double w) const {
  return lead_integrator.response(w, ts) * lowpass.response(w, ts);
}

PidAxisDesign design_pid(double f_bw, double ts, double mass, double first_resonance_hz) {
  if (!(f_bw > 0.0) || !std::isfinite(f_bw)) throw Error(ErrorCode::InvalidArgument, "f_bw must be positive");
  if (!(ts > 0.0)) throw Error(ErrorCode::InvalidArgument, "Ts must be positive");
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "axis mass must be positive");
  PidAxisDesign d;
  d.f_bw = f_bw;
  d.mass = mass;
  d.ts = ts;
  const double wbw = 2.0 * std::numbers::pi * f_bw;
  d.wz = wbw / 3.0;
  d.wp = 3.0 * wbw;
  d.wi = wbw / 5.0;
  d.wlp = 6.0 * wbw;
  d.f_lp = 6.0 * f_bw;
  if (d.wlp * ts >= std::numbers::pi) throw Error(ErrorCode::AboveNyquist, "PID low-pass corner above Nyquist");
  if (first_resonance_hz > 0.0 && f_bw > first_resonance_hz / 10.0) {
    std::ostringstream os;
    os << "bandwidth " << f_bw << " Hz exceeds 1/10 of the first controlled resonance (" << first_resonance_hz
       << " Hz)";
    d.warning = os.str();
  }
  d.k = 1.0;
  const Complex s(0.0, wbw);
  d.k = 1.0 / std::abs(d.continuous_response(wbw) / (mass * s * s));
  d.kp = d.k * (1.0 + d.wi / d.wz);
  d.ki = d.k * d.wi;
  d.kd = d.k / d.wz;
  // (s/wz + 1)(s + wi) / ((s/wp + 1) s)
  d.lead_integrator = bilinear_biquad(d.k / d.wz, d.k * (1.0 + d.wi / d.wz), d.k * d.wi, 1.0 / d.wp, 1.0, 0.0, ts);
  d.lowpass = bilinear_biquad(0.0, 0.0, d.wlp * d.wlp, 1.0, 2.0 * d.zeta_lp * d.wlp, d.wlp * d.wlp, ts);
  if (!d.lowpass.stable()) throw Error(ErrorCode::Unstable, "PID low-pass section unstable");
  return d;
}

RigidBodyController::RigidBodyController(const std::vector<PidAxisDesign>& axes) {
  for (const auto& a : axes) axes_.emplace_back(a);
  u_ = VectorXd::Zero(static_cast<Index>(axes_.size()));
}

const VectorXd& RigidBodyController::step(const VectorXd& e) {
  if (e.size() != axes()) throw Error(ErrorCode::DimensionMismatch, "error vector size");
  for (Index i = 0; i < axes(); ++i) u_(i) = axes_[static_cast<std::size_t>(i)].step(e(i));
  return u_;
}

void RigidBodyController::reset() {
  for (auto& a : axes_) a.reset();
  u_.setZero();
}

FeedforwardDesign FeedforwardDesign::mass_only(Index axes, double mass) {
  FeedforwardDesign f;
  f.mass = VectorXd::Constant(axes, mass);
  f.snap_gain = VectorXd::Zero(axes);
  return f;
}

VectorXd FeedforwardDesign::step(const VectorXd& acc, const VectorXd& snap) const {
  if (!enabled) return VectorXd::Zero(mass.size());
  return mass.cwiseProduct(acc) + snap_gain.cwiseProduct(snap);
}

}  // namespace flexctl
