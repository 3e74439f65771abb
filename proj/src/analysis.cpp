#include "flexctl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "flexctl/error.hpp"
#include "flexctl/loop_model.hpp"

namespace flexctl {

VectorXd log_grid(double f_min, double f_max, Index points) {
  if (!(f_min > 0.0) || !(f_max > f_min) || points < 2) {
    throw Error(ErrorCode::InvalidArgument, "log grid needs 0 < f_min < f_max and two points");
  }
  VectorXd f(points);
  const double a = std::log10(f_min);
  const double b = std::log10(f_max);
  for (Index i = 0; i < points; ++i) f(i) = std::pow(10.0, a + (b - a) * static_cast<double>(i) / (points - 1));
  f(0) = f_min;
  f(points - 1) = f_max;
  return f;
}

VectorXd linear_grid(double f_lo, double f_hi, Index points) {
  if (!(f_hi > f_lo) || points < 2) throw Error(ErrorCode::InvalidArgument, "linear grid needs f_lo < f_hi");
  return VectorXd::LinSpaced(points, f_lo, f_hi);
}

FrequencyEvaluator::FrequencyEvaluator(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c, double ts)
    : ts_(ts) {
  Eigen::HessenbergDecomposition<MatrixXd> hd(a);
  h_ = hd.matrixH();
  const MatrixXd q = hd.matrixQ();
  b_ = q.transpose() * b;
  c_ = c * q;
}

MatrixXcd FrequencyEvaluator::solve(double f_hz, const MatrixXd& rhs) const {
  const Index n = h_.rows();
  const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * f_hz * ts_);
  MatrixXcd m = -h_.cast<Complex>();
  m.diagonal().array() += z;
  MatrixXcd x = rhs.cast<Complex>();
  // Gaussian elimination with adjacent-row pivoting keeps the Hessenberg
  // structure, so each step touches one row.
  for (Index k = 0; k + 1 < n; ++k) {
    if (std::abs(m(k + 1, k)) > std::abs(m(k, k))) {
      m.row(k).tail(n - k).swap(m.row(k + 1).tail(n - k));
      x.row(k).swap(x.row(k + 1));
    }
    if (m(k + 1, k) == Complex(0.0)) continue;
    const Complex f = m(k + 1, k) / m(k, k);
    m.row(k + 1).tail(n - k) -= f * m.row(k).tail(n - k);
    x.row(k + 1) -= f * x.row(k);
  }
  for (Index k = n - 1; k >= 0; --k) {
    if (m(k, k) == Complex(0.0)) throw Error(ErrorCode::IllPosed, "frequency coincides with a loop pole");
    if (k + 1 < n) x.row(k) -= m.row(k).tail(n - k - 1) * x.bottomRows(n - k - 1);
    x.row(k) /= m(k, k);
  }
  return x;
}

MatrixXcd FrequencyEvaluator::at(double f_hz) const { return c_.cast<Complex>() * solve(f_hz, b_); }

Complex FrequencyEvaluator::at(double f_hz, Index out, Index in) const {
  return (c_.row(out).cast<Complex>() * solve(f_hz, b_.col(in)))(0, 0);
}

VectorXd FrfData::magnitude(Index out, Index in) const {
  VectorXd m(points());
  for (Index i = 0; i < points(); ++i) m(i) = std::abs(response[static_cast<std::size_t>(i)](out, in));
  return m;
}

FrfData equivalent_mechanics_frf(const PlantStack& stack, const ControllerDesign& design, const SchedulingPoint& p,
                                 bool flex, const VectorXd& freq_hz) {
  const double nyquist = 0.5 / design.ts;
  for (Index i = 0; i < freq_hz.size(); ++i) {
    if (!(freq_hz(i) > 0.0) || freq_hz(i) >= nyquist || (i > 0 && !(freq_hz(i) > freq_hz(i - 1)))) {
      throw Error(ErrorCode::InvalidArgument, "FRF grid must be increasing, positive and below Nyquist");
    }
  }
  const LoopModel m = frozen_loop(stack, design, p, flex, false);
  const FrequencyEvaluator ev(m.a, m.b, m.c, design.ts);
  FrfData out;
  out.freq_hz = freq_hz;
  out.p = p;
  out.flex = flex;
  for (Index i = 0; i < freq_hz.size(); ++i) out.response.push_back(ev.at(freq_hz(i)));
  return out;
}

double suppression_db(const FrfData& off, const FrfData& on, double f_lo, double f_hi, Index out, Index in) {
  if (off.points() != on.points() || off.freq_hz != on.freq_hz) {
    throw Error(ErrorCode::LengthMismatch, "FRFs must share the frequency grid");
  }
  double a = 0.0;
  double b = 0.0;
  bool any = false;
  for (Index i = 0; i < off.points(); ++i) {
    if (off.freq_hz(i) < f_lo || off.freq_hz(i) > f_hi) continue;
    any = true;
    a = std::max(a, std::abs(off.response[static_cast<std::size_t>(i)](out, in)));
    b = std::max(b, std::abs(on.response[static_cast<std::size_t>(i)](out, in)));
  }
  if (!any) throw Error(ErrorCode::EmptyBand, "no grid frequency inside the band");
  return 20.0 * std::log10(a / b);
}

namespace {

// Peak of |H| on a dense grid, refined by golden-section search between the
// neighbours of the best grid point.
std::pair<double, double> refined_peak(const FrequencyEvaluator& ev, const VectorXd& grid, Index out, Index in) {
  Index best = 0;
  double best_mag = -1.0;
  for (Index i = 0; i < grid.size(); ++i) {
    const double m = std::abs(ev.at(grid(i), out, in));
    if (m > best_mag) {
      best_mag = m;
      best = i;
    }
  }
  double lo = grid(std::max<Index>(best - 1, 0));
  double hi = grid(std::min<Index>(best + 1, grid.size() - 1));
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  auto mag = [&](double f) { return std::abs(ev.at(f, out, in)); };
  double x1 = hi - g * (hi - lo);
  double x2 = lo + g * (hi - lo);
  double m1 = mag(x1);
  double m2 = mag(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-9 * hi; ++it) {
    if (m1 > m2) {
      hi = x2;
      x2 = x1;
      m2 = m1;
      x1 = hi - g * (hi - lo);
      m1 = mag(x1);
    } else {
      lo = x1;
      x1 = x2;
      m1 = m2;
      x2 = lo + g * (hi - lo);
      m2 = mag(x2);
    }
  }
  const double f = m1 > m2 ? x1 : x2;
  const double m = std::max(m1, m2);
  if (m >= best_mag) return {f, m};
  return {grid(best), best_mag};
}

}  // namespace

PeakSuppression mode_suppression(const PlantStack& stack, const ControllerDesign& design, const SchedulingPoint& p,
                                 Index controlled, const AnalysisSection& opts, Index out, Index in) {
  if (controlled < 0 || controlled >= design.gains.modes()) {
    throw Error(ErrorCode::InvalidArgument, "controlled mode index out of range");
  }
  PeakSuppression r;
  r.p = p;
  const double w = design.gains.omega(controlled);
  r.f_mode = w / (2.0 * std::numbers::pi);
  r.law_db = 20.0 * std::log10(design.gains.targets.zeta_star(controlled) / design.gains.zeta(controlled));
  const double f_lo = r.f_mode * (1.0 - opts.band_halfwidth);
  const double f_hi = std::min(r.f_mode * (1.0 + opts.band_halfwidth), 0.5 / design.ts * 0.999);
  const VectorXd grid = linear_grid(f_lo, f_hi, opts.band_points);
  const LoopModel off = frozen_loop(stack, design, p, false, false);
  const LoopModel on = frozen_loop(stack, design, p, true, false);
  const FrequencyEvaluator ev_off(off.a, off.b, off.c, design.ts);
  const FrequencyEvaluator ev_on(on.a, on.b, on.c, design.ts);
  std::tie(r.f_peak_off, r.peak_off) = refined_peak(ev_off, grid, out, in);
  std::tie(r.f_peak_on, r.peak_on) = refined_peak(ev_on, grid, out, in);
  r.db = 20.0 * std::log10(r.peak_off / r.peak_on);
  return r;
}

MovingStats moving_stats(const VectorXd& e, double ts, double window) {
  if (!(ts > 0.0) || !(window > 0.0)) throw Error(ErrorCode::InvalidArgument, "window and Ts must be positive");
  const Index len = static_cast<Index>(std::floor(window / ts * (1.0 + 1e-12))) + 1;
  if (len < 2) throw Error(ErrorCode::InvalidArgument, "window shorter than one sample period");
  if (len > e.size()) throw Error(ErrorCode::WindowTooLong, "moving window longer than the record");
  MovingStats s;
  s.left = (len - 1) / 2;
  s.right = len - 1 - s.left;
  const Index n = e.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.ma = VectorXd::Constant(n, nan);
  s.msd = VectorXd::Constant(n, nan);
  const double norm = static_cast<double>(len - 1);
  for (Index k = s.left; k + s.right < n; ++k) {
    const auto seg = e.segment(k - s.left, len);
    const double ma = (seg.sum() - 0.5 * (seg(0) + seg(len - 1))) / norm;
    const VectorXd d2 = (seg.array() - ma).square();
    const double var = (d2.sum() - 0.5 * (d2(0) + d2(len - 1))) / norm;
    s.ma(k) = ma;
    s.msd(k) = std::sqrt(std::max(var, 0.0));
  }
  return s;
}

const DieMetrics& ExposureMetrics::at(int die, Index axis) const {
  for (const auto& m : entries) {
    if (m.die == die && m.axis == axis) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "no metrics for die " + std::to_string(die));
}

double ExposureMetrics::worst_msd(Index axis) const {
  double w = 0.0;
  for (const auto& m : entries) {
    if (m.axis == axis) w = std::max(w, m.msd_peak);
  }
  return w;
}

ExposureMetrics ma_msd(const MatrixXd& error, double ts, const std::vector<Window>& windows, double window) {
  ExposureMetrics out;
  out.window = window;
  for (Index axis = 0; axis < error.rows(); ++axis) {
    const MovingStats s = moving_stats(error.row(axis).transpose(), ts, window);
    for (const Window& w : windows) {
      if (w.begin < 0 || w.end > error.cols() || w.end <= w.begin) {
        throw Error(ErrorCode::InvalidArgument, "exposure window outside the record");
      }
      DieMetrics m;
      m.die = w.die;
      m.axis = axis;
      for (Index k = w.begin; k < w.end; ++k) {
        if (std::isnan(s.ma(k))) continue;
        m.ma_peak = std::max(m.ma_peak, std::abs(s.ma(k)));
        m.msd_peak = std::max(m.msd_peak, s.msd(k));
      }
      out.entries.push_back(m);
    }
  }
  std::stable_sort(out.entries.begin(), out.entries.end(), [](const DieMetrics& a, const DieMetrics& b) {
    return a.die != b.die ? a.die < b.die : a.axis < b.axis;
  });
  return out;
}

double CumulativePsd::band_power(double f_lo, double f_hi) const {
  // Cumulative value just below f_lo and at the last bin not above f_hi.
  double below = 0.0;
  double upto = 0.0;
  for (Index i = 0; i < freq_hz.size(); ++i) {
    if (freq_hz(i) < f_lo) below = cumulative(i);
    if (freq_hz(i) <= f_hi) upto = cumulative(i);
  }
  if (upto < below) throw Error(ErrorCode::EmptyBand, "band outside the spectrum");
  return upto - below;
}

CumulativePsd cumulative_psd(const VectorXd& x, double ts, Index segment) {
  if (segment < 8 || segment % 2 != 0) throw Error(ErrorCode::InvalidArgument, "segment length must be even, >= 8");
  if (x.size() < segment) throw Error(ErrorCode::TooShort, "record shorter than one Welch segment");
  const double fs = 1.0 / ts;
  const VectorXd xc = x.array() - x.mean();
  VectorXd win(segment);
  for (Index i = 0; i < segment; ++i) {
    win(i) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(segment));
  }
  const double u = win.squaredNorm();
  const Index hop = segment / 2;
  const Index count = (x.size() - segment) / hop + 1;
  const Index bins = segment / 2 + 1;
  VectorXd acc = VectorXd::Zero(bins);
  Eigen::FFT<double> fft;
  std::vector<double> buf(static_cast<std::size_t>(segment));
  std::vector<Complex> spec;
  for (Index s = 0; s < count; ++s) {
    for (Index i = 0; i < segment; ++i) buf[static_cast<std::size_t>(i)] = win(i) * xc(s * hop + i);
    fft.fwd(spec, buf);
    for (Index k = 0; k < bins; ++k) acc(k) += std::norm(spec[static_cast<std::size_t>(k)]);
  }
  CumulativePsd out;
  out.freq_hz.resize(bins);
  out.psd.resize(bins);
  out.cumulative.resize(bins);
  const double df = fs / static_cast<double>(segment);
  double run = 0.0;
  for (Index k = 0; k < bins; ++k) {
    const double one_sided = (k == 0 || k == bins - 1) ? 1.0 : 2.0;
    out.freq_hz(k) = df * static_cast<double>(k);
    out.psd(k) = one_sided * acc(k) / (static_cast<double>(count) * fs * u);
    run += out.psd(k) * df;
    out.cumulative(k) = run;
  }
  out.variance = xc.squaredNorm() / static_cast<double>(x.size());
  return out;
}

}  // namespace flexctl
