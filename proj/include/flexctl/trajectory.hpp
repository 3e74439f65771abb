#pragma once

#include <vector>

#include "flexctl/linalg.hpp"

namespace flexctl {

struct MotionLimits {
  double v = 0.8;    // m/s
  double a = 35.0;   // m/s^2
  double j = 3500.0; // m/s^3
  double s = 7e5;    // m/s^4

  void validate() const;
};

// Symmetric 4th-order profile: snap pulses of length t_s, constant-jerk
// phases t_j, constant-acceleration phases t_a, constant velocity t_v.
struct ProfileTiming {
  double t_s = 0.0, t_j = 0.0, t_a = 0.0, t_v = 0.0;
  double snap = 0.0;

  double accel_time() const { return 4.0 * t_s + 2.0 * t_j + t_a; }
  double duration() const { return 8.0 * t_s + 4.0 * t_j + 2.0 * t_a + t_v; }
  double peak_jerk() const { return snap * t_s; }
  double peak_acc() const { return snap * t_s * (t_s + t_j); }
  double peak_vel() const { return peak_acc() * (2.0 * t_s + t_j + t_a); }
  double distance() const { return peak_vel() * (accel_time() + t_v); }
};

// Continuous time-optimal timing for a move of |distance|.
ProfileTiming continuous_timing(double distance, const MotionLimits& limits);

struct MovePlan {
  double distance = 0.0;  // signed
  Index n_s = 0, n_j = 0, n_a = 0, n_v = 0;
  double ts = 0.0;
  ProfileTiming timing;   // discrete durations and rescaled snap

  Index samples() const { return 8 * n_s + 4 * n_j + 2 * n_a + n_v; }
};

// Rounds the phases up to whole samples and rescales snap so the
// displacement is exact; every derivative bound stays satisfied.
MovePlan plan_profile(double distance, const MotionLimits& limits, double ts);

struct AxisSamples {
  VectorXd pos, vel, acc, jerk, snap;  // samples() + 1 entries, snap(k) held over [k, k+1)
};

AxisSamples sample_profile(const MovePlan& plan, double start);

struct Window {
  Index begin = 0;  // first sample
  Index end = 0;    // one past the last sample
  int die = 0;

  Index size() const { return end - begin; }
  bool contains(const Window& w) const { return w.begin >= begin && w.end <= end; }
};

struct ReferenceTrace {
  double ts = 0.0;
  MatrixXd pos, vel, acc, jerk, snap;  // axes x samples
  std::vector<double> boundaries;      // segment boundary times (s)
  std::vector<Window> cv_windows;
  std::vector<Window> exposure_windows;
  Index scan_axis = 0;

  Index axes() const { return pos.rows(); }
  Index samples() const { return pos.cols(); }
};

// Multi-axis point-to-point move, each axis planned independently and
// held at its target once finished.
ReferenceTrace plan_move(const VectorXd& start, const VectorXd& end, const std::vector<MotionLimits>& limits,
                         double ts);

struct ScanLine {
  double x_start = 0.0;
  double x_end = 0.0;
  double y = 0.0;
};

struct ScanOptions {
  double guard = 0.010;   // s, exposure window shrink per side
  double dwell = 0.005;   // s, hold before every move and at the end
  Index axes = 3;         // x, y and a zero third axis
};

std::vector<ScanLine> demo_layout();

ReferenceTrace scan_sequence(const std::vector<ScanLine>& lines, const MotionLimits& x_limits,
                             const MotionLimits& y_limits, double ts, const ScanOptions& opts = {});

}  // namespace flexctl
