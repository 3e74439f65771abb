#pragma once

#include <string>
#include <vector>

#include "flexctl/flex_control.hpp"
#include "flexctl/linalg.hpp"

namespace flexctl {

// Mass-line PID rule, fixed so that baseline and extended runs are
// reproducible:
//   C(s) = k (1 + s/wz)/(1 + s/wp) (s + wi)/s wlp^2/(s^2 + 2 z wlp s + wlp^2)
// with wz = wbw/3, wp = 3 wbw, wi = wbw/5, wlp = 6 wbw, z = 0.5 and k set
// for |C(j wbw)/(m (j wbw)^2)| = 1.
struct PidAxisDesign {
  double f_bw = 0.0;  // Hz
  double mass = 1.0;
  double ts = 0.0;
  double k = 0.0;
  double wz = 0.0, wp = 0.0, wi = 0.0, wlp = 0.0;
  double zeta_lp = 0.5;
  double kp = 0.0, ki = 0.0, kd = 0.0;  // parallel-form equivalents (informational)
  double f_lp = 0.0;                    // Hz
  Biquad lead_integrator;
  Biquad lowpass;
  std::string warning;

  Complex continuous_response(double w) const;
  Complex discrete_response(double w) const;
};

inline constexpr int kPidRuleVersion = 1;

// first_resonance_hz > 0 enables the f_bw < resonance/10 advisory.
PidAxisDesign design_pid(double f_bw, double ts, double mass = 1.0, double first_resonance_hz = 0.0);

// Tustin map of (n2 s^2 + n1 s + n0)/(d2 s^2 + d1 s + d0).
Biquad bilinear_biquad(double n2, double n1, double n0, double d2, double d1, double d0, double ts);

class PidAxis {
 public:
  PidAxis() = default;
  explicit PidAxis(const PidAxisDesign& d) : a_(d.lead_integrator), b_(d.lowpass) {
    a_.reset();
    b_.reset();
  }
  double step(double e) { return b_.step(a_.step(e)); }
  void reset() {
    a_.reset();
    b_.reset();
  }

 private:
  Biquad a_;
  Biquad b_;
};

class RigidBodyController {
 public:
  RigidBodyController() = default;
  explicit RigidBodyController(const std::vector<PidAxisDesign>& axes);

  const VectorXd& step(const VectorXd& e);
  void reset();
  Index axes() const { return static_cast<Index>(axes_.size()); }

 private:
  std::vector<PidAxis> axes_;
  VectorXd u_;
};

struct FeedforwardDesign {
  VectorXd mass;  // per decoupled axis
  VectorXd snap_gain;
  bool enabled = true;

  static FeedforwardDesign mass_only(Index axes, double mass = 1.0);
  // u_FF = m a + k_s s
  VectorXd step(const VectorXd& acc, const VectorXd& snap) const;
};

}  // namespace flexctl
