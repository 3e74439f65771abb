#pragma once

#include <vector>

#include "flexctl/config.hpp"
#include "flexctl/design.hpp"
#include "flexctl/trajectory.hpp"

namespace flexctl {

VectorXd log_grid(double f_min, double f_max, Index points);
VectorXd linear_grid(double f_lo, double f_hi, Index points);

// Evaluates C (zI - A)^-1 B on the unit circle after one Hessenberg
// reduction, so every frequency costs O(n^2) per input.
class FrequencyEvaluator {
 public:
  FrequencyEvaluator(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c, double ts);

  MatrixXcd at(double f_hz) const;
  Complex at(double f_hz, Index out, Index in) const;

 private:
  MatrixXd h_;
  MatrixXd b_;
  MatrixXd c_;
  double ts_;

  MatrixXcd solve(double f_hz, const MatrixXd& rhs) const;
};

struct FrfData {
  VectorXd freq_hz;
  std::vector<MatrixXcd> response;  // per frequency, outputs x inputs
  SchedulingPoint p;
  bool flex = false;

  Index points() const { return freq_hz.size(); }
  VectorXd magnitude(Index out, Index in) const;
};

// u_RB -> y_RB of the frozen interconnection with K_RB open.
FrfData equivalent_mechanics_frf(const PlantStack& stack, const ControllerDesign& design, const SchedulingPoint& p,
                                 bool flex, const VectorXd& freq_hz);

// 20 log10(max |off| / max |on|) over [f_lo, f_hi] on the shared grid.
double suppression_db(const FrfData& off, const FrfData& on, double f_lo, double f_hi, Index out = 0, Index in = 0);

struct PeakSuppression {
  SchedulingPoint p;
  double f_mode = 0.0;  // Hz, open-loop mode frequency
  double f_peak_off = 0.0, f_peak_on = 0.0;
  double peak_off = 0.0, peak_on = 0.0;
  double db = 0.0;
  double law_db = 0.0;  // 20 log10(zeta* / zeta)
};

// Dense linear band search around the mode followed by golden-section
// refinement of each peak.
PeakSuppression mode_suppression(const PlantStack& stack, const ControllerDesign& design, const SchedulingPoint& p,
                                 Index controlled, const AnalysisSection& opts, Index out = 0, Index in = 0);

// Centered moving average and moving standard deviation over
// floor(T/Ts) + 1 samples with trapezoidal end weights. Samples whose
// window leaves the record are NaN.
struct MovingStats {
  VectorXd ma;
  VectorXd msd;
  Index left = 0;
  Index right = 0;
};

MovingStats moving_stats(const VectorXd& e, double ts, double window);

struct DieMetrics {
  int die = 0;
  Index axis = 0;
  double ma_peak = 0.0;
  double msd_peak = 0.0;
};

struct ExposureMetrics {
  double window = 0.0;
  std::vector<DieMetrics> entries;  // die-major, axis-minor

  const DieMetrics& at(int die, Index axis) const;
  double worst_msd(Index axis) const;
};

ExposureMetrics ma_msd(const MatrixXd& error, double ts, const std::vector<Window>& windows, double window);

// One-sided Welch estimate (Hann, 50 % overlap) and its running integral.
struct CumulativePsd {
  VectorXd freq_hz;
  VectorXd psd;         // unit^2 / Hz
  VectorXd cumulative;  // unit^2
  double variance = 0.0;  // of the mean-removed segment

  double band_power(double f_lo, double f_hi) const;
};

CumulativePsd cumulative_psd(const VectorXd& x, double ts, Index segment = 2048);

}  // namespace flexctl
