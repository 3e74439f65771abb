#pragma once

#include <vector>

#include "flexctl/linalg.hpp"
#include "flexctl/modal_model.hpp"

namespace flexctl {

struct ModalTargets {
  VectorXd zeta_star;
  VectorXd omega_star;  // rad/s

  void validate(Index n_ctl) const;
};

struct FlexGains {
  std::vector<Index> controlled;  // flexible-mode indices
  MatrixXd ks;                    // n_u x n_ctl
  MatrixXd kd;                    // n_u x n_ctl
  VectorXd omega;                 // open-loop values of the controlled modes
  VectorXd zeta;
  ModalTargets targets;

  Index inputs() const { return ks.rows(); }
  Index modes() const { return ks.cols(); }
  MatrixXd k_fm() const;  // (K_s K_d)
};

// K_s = -B+ (W*^2 - W^2), K_d = -B+ (2 Z* W* - 2 Z W), where B (n_ctl x n_u)
// maps the injected input to the modal accelerations of the controlled modes.
FlexGains design_gains(const MatrixXd& b_ctl, const VectorXd& omega, const VectorXd& zeta, const ModalTargets& targets,
                       double max_condition = 1e8);

// Same, reading B from the decoupled plant (u_FM injected ahead of T_u).
FlexGains design_gains(const DecoupledPlant& plant, const std::vector<Index>& controlled, const ModalTargets& targets,
                       double max_condition = 1e8);

// Direct form II transposed second-order section.
struct Biquad {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
  double s1 = 0.0, s2 = 0.0;

  double step(double x) {
    const double y = b0 * x + s1;
    s1 = b1 * x - a1 * y + s2;
    s2 = b2 * x - a2 * y;
    return y;
  }
  void reset() { s1 = s2 = 0.0; }
  Complex response(double omega, double ts) const;
  bool stable() const;
};

// Squared second-order band-pass ((w/Q) s / (s^2 + (w/Q) s + w^2))^2,
// bilinear with prewarp at w.
struct BandPassDesign {
  double omega = 0.0;
  double q = 5.0;
  double ts = 0.0;
  Biquad section;  // one factor; the filter is two identical sections in cascade

  Complex response(double w) const;
  Complex continuous_response(double w) const;
};

BandPassDesign make_bandpass(double omega, double q, double ts);

class BandPassFilter {
 public:
  BandPassFilter() = default;
  explicit BandPassFilter(const BandPassDesign& d) : first_(d.section), second_(d.section) {
    first_.reset();
    second_.reset();
  }
  double step(double x) { return second_.step(first_.step(x)); }
  void reset() {
    first_.reset();
    second_.reset();
  }
  bool at_rest() const { return first_.s1 == 0.0 && first_.s2 == 0.0 && second_.s1 == 0.0 && second_.s2 == 0.0; }

 private:
  Biquad first_;
  Biquad second_;
};

// u_FM = sum_j K_s,j BP_j(q_j) + K_d,j BP_j(dq_j), one filter per modal signal.
class FlexController {
 public:
  FlexController() = default;
  FlexController(FlexGains gains, std::vector<BandPassDesign> filters, bool bypass_filter = false);

  // estimate: (q_0, dq_0, q_1, dq_1, ..) over the controlled modes.
  const VectorXd& step(const VectorXd& estimate);
  void reset();

  const FlexGains& gains() const { return gains_; }
  const std::vector<BandPassDesign>& filters() const { return designs_; }
  const VectorXd& output() const { return u_; }

 private:
  FlexGains gains_;
  std::vector<BandPassDesign> designs_;
  std::vector<BandPassFilter> pos_;
  std::vector<BandPassFilter> vel_;
  bool bypass_ = false;
  VectorXd u_;
};

}  // namespace flexctl
