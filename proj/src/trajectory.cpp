#include "flexctl/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "flexctl/error.hpp"

namespace flexctl {

namespace {

constexpr double kSnapBackoff = 1e-12;

// Largest root-bounded t in [0, hi] with f(t) <= 0 for increasing f.
template <class F>
double bisect_upper(F f, double hi) {
  if (f(hi) <= 0.0) return hi;
  double lo = 0.0;
  if (f(lo) > 0.0) return 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-18; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) <= 0.0) lo = mid; else hi = mid;
  }
  return lo;
}

struct Segment {
  Index n;
  double snap;
};

std::vector<Segment> segments(const MovePlan& p) {
  const double s = p.timing.snap * (p.distance < 0.0 ? -1.0 : 1.0);
  return {{p.n_s, s},  {p.n_j, 0.0}, {p.n_s, -s}, {p.n_a, 0.0}, {p.n_s, -s}, {p.n_j, 0.0}, {p.n_s, s},
          {p.n_v, 0.0},
          {p.n_s, -s}, {p.n_j, 0.0}, {p.n_s, s},  {p.n_a, 0.0}, {p.n_s, s},  {p.n_j, 0.0}, {p.n_s, -s}};
}

struct State {
  double p = 0.0, v = 0.0, a = 0.0, j = 0.0;

  State advance(double s, double t) const {
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double t4 = t3 * t;
    return {p + v * t + a * t2 / 2.0 + j * t3 / 6.0 + s * t4 / 24.0, v + a * t + j * t2 / 2.0 + s * t3 / 6.0,
            a + j * t + s * t2 / 2.0, j + s * t};
  }
};

}  // namespace

void MotionLimits::validate() const {
  for (double x : {v, a, j, s}) {
    if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorCode::InfeasibleLimits, "motion limits must be positive");
  }
}

ProfileTiming continuous_timing(double distance, const MotionLimits& lim) {
  lim.validate();
  const double d = std::abs(distance);
  ProfileTiming t;
  t.snap = lim.s;
  if (d == 0.0) return t;
  const double s = lim.s;
  t.t_s = std::min({lim.j / s, std::sqrt(lim.a / s), std::cbrt(lim.v / (2.0 * s)), std::pow(d / (8.0 * s), 0.25)});
  const double ts = t.t_s;

  double tj = std::max(0.0, lim.a / (s * ts) - ts);
  tj = std::min(tj, std::max(0.0, 0.5 * (-3.0 * ts + std::sqrt(ts * ts + 4.0 * lim.v / (s * ts)))));
  tj = bisect_upper([&](double x) { return 2.0 * s * ts * (ts + x) * (2.0 * ts + x) * (2.0 * ts + x) - d; }, tj);
  t.t_j = tj;

  const double ap = s * ts * (ts + tj);
  const double t1 = 2.0 * ts + tj;
  double ta = std::max(0.0, lim.v / ap - t1);
  ta = std::min(ta, std::max(0.0, 0.5 * (-3.0 * t1 + std::sqrt(t1 * t1 + 4.0 * d / ap))));
  t.t_a = ta;

  t.t_v = std::max(0.0, d / (ap * (t1 + ta)) - (2.0 * t1 + ta));
  return t;
}

MovePlan plan_profile(double distance, const MotionLimits& limits, double ts) {
  if (!(ts > 0.0)) throw Error(ErrorCode::InvalidArgument, "Ts must be positive");
  if (!std::isfinite(distance)) throw Error(ErrorCode::InvalidArgument, "move distance must be finite");
  const ProfileTiming c = continuous_timing(distance, limits);
  MovePlan p;
  p.distance = distance;
  p.ts = ts;
  if (distance == 0.0) return p;
  auto up = [ts](double t) { return static_cast<Index>(std::ceil(t / ts)); };
  p.n_s = std::max<Index>(1, up(c.t_s));
  p.n_j = up(c.t_j);
  p.n_a = up(c.t_a);
  p.n_v = up(c.t_v);
  p.timing.t_s = static_cast<double>(p.n_s) * ts;
  p.timing.t_j = static_cast<double>(p.n_j) * ts;
  p.timing.t_a = static_cast<double>(p.n_a) * ts;
  p.timing.t_v = static_cast<double>(p.n_v) * ts;
  p.timing.snap = 1.0;
  // Every rounded phase is at least its continuous length, so the rescaled
  // snap, jerk, acceleration and velocity peaks cannot grow.
  p.timing.snap = std::abs(distance) / p.timing.distance() * (1.0 - kSnapBackoff);
  return p;
}

AxisSamples sample_profile(const MovePlan& plan, double start) {
  const Index n = plan.samples();
  AxisSamples out;
  out.pos = VectorXd::Constant(n + 1, start);
  out.vel = VectorXd::Zero(n + 1);
  out.acc = VectorXd::Zero(n + 1);
  out.jerk = VectorXd::Zero(n + 1);
  out.snap = VectorXd::Zero(n + 1);
  if (n == 0) return out;
  const double ts = plan.ts;
  State seg_start{start, 0.0, 0.0, 0.0};
  Index k = 0;
  for (const Segment& seg : segments(plan)) {
    for (Index m = 0; m < seg.n; ++m) {
      const State st = seg_start.advance(seg.snap, static_cast<double>(m) * ts);
      out.pos(k) = st.p;
      out.vel(k) = st.v;
      out.acc(k) = st.a;
      out.jerk(k) = st.j;
      out.snap(k) = seg.snap;
      ++k;
    }
    seg_start = seg_start.advance(seg.snap, static_cast<double>(seg.n) * ts);
  }
  out.pos(n) = start + plan.distance;
  return out;
}

ReferenceTrace plan_move(const VectorXd& start, const VectorXd& end, const std::vector<MotionLimits>& limits,
                         double ts) {
  const Index axes = start.size();
  if (end.size() != axes || static_cast<Index>(limits.size()) != axes) {
    throw Error(ErrorCode::DimensionMismatch, "plan_move: one start, end and limit set per axis");
  }
  std::vector<MovePlan> plans;
  Index n = 0;
  for (Index i = 0; i < axes; ++i) {
    plans.push_back(plan_profile(end(i) - start(i), limits[static_cast<std::size_t>(i)], ts));
    n = std::max(n, plans.back().samples());
  }
  ReferenceTrace tr;
  tr.ts = ts;
  tr.pos.resize(axes, n + 1);
  tr.vel = MatrixXd::Zero(axes, n + 1);
  tr.acc = MatrixXd::Zero(axes, n + 1);
  tr.jerk = MatrixXd::Zero(axes, n + 1);
  tr.snap = MatrixXd::Zero(axes, n + 1);
  for (Index i = 0; i < axes; ++i) {
    const MovePlan& p = plans[static_cast<std::size_t>(i)];
    const AxisSamples s = sample_profile(p, start(i));
    const Index m = p.samples();
    tr.pos.row(i).head(m + 1) = s.pos.transpose();
    tr.pos.row(i).tail(n - m).setConstant(end(i));
    tr.vel.row(i).head(m + 1) = s.vel.transpose();
    tr.acc.row(i).head(m + 1) = s.acc.transpose();
    tr.jerk.row(i).head(m + 1) = s.jerk.transpose();
    tr.snap.row(i).head(m + 1) = s.snap.transpose();
    double t = 0.0;
    for (const Segment& seg : segments(p)) {
      if (seg.n == 0) continue;
      t += static_cast<double>(seg.n) * ts;
      tr.boundaries.push_back(t);
    }
  }
  std::sort(tr.boundaries.begin(), tr.boundaries.end());
  tr.boundaries.erase(std::unique(tr.boundaries.begin(), tr.boundaries.end()), tr.boundaries.end());
  return tr;
}

namespace {

// Appends piece, whose first sample coincides with the last of total.
Index append(ReferenceTrace& total, const ReferenceTrace& piece) {
  if (total.samples() == 0) {
    total = piece;
    return 0;
  }
  const Index offset = total.samples() - 1;
  const Index add = piece.samples() - 1;
  auto grow = [&](MatrixXd& dst, const MatrixXd& src) {
    MatrixXd m(dst.rows(), dst.cols() + add);
    m << dst, src.rightCols(add);
    // The junction sample belongs to the new piece (its snap starts there).
    m.col(offset) = src.col(0);
    dst.swap(m);
  };
  grow(total.pos, piece.pos);
  grow(total.vel, piece.vel);
  grow(total.acc, piece.acc);
  grow(total.jerk, piece.jerk);
  grow(total.snap, piece.snap);
  const double t0 = static_cast<double>(offset) * total.ts;
  for (double b : piece.boundaries) total.boundaries.push_back(t0 + b);
  return offset;
}

ReferenceTrace hold(const VectorXd& at, Index samples, double ts) {
  ReferenceTrace tr;
  tr.ts = ts;
  tr.pos = at.replicate(1, samples + 1);
  tr.vel = MatrixXd::Zero(at.size(), samples + 1);
  tr.acc = tr.vel;
  tr.jerk = tr.vel;
  tr.snap = tr.vel;
  if (samples > 0) tr.boundaries.push_back(static_cast<double>(samples) * ts);
  return tr;
}

}  // namespace

std::vector<ScanLine> demo_layout() {
  std::vector<ScanLine> lines;
  const double ys[] = {-0.10, -0.05, 0.0, 0.05, 0.10};
  for (int i = 0; i < 5; ++i) {
    const double dir = (i % 2 == 0) ? 1.0 : -1.0;
    lines.push_back({-0.12 * dir, 0.12 * dir, ys[i]});
  }
  return lines;
}

ReferenceTrace scan_sequence(const std::vector<ScanLine>& lines, const MotionLimits& x_limits,
                             const MotionLimits& y_limits, double ts, const ScanOptions& opts) {
  if (lines.empty()) throw Error(ErrorCode::InvalidArgument, "scan layout is empty");
  if (opts.axes < 2) throw Error(ErrorCode::InvalidArgument, "scan needs at least the x and y axes");
  if (!(opts.guard >= 0.0) || !(opts.dwell >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative guard/dwell");
  std::vector<MotionLimits> lims(static_cast<std::size_t>(opts.axes), x_limits);
  lims[1] = y_limits;
  const Index dwell = static_cast<Index>(std::llround(opts.dwell / ts));
  const Index guard = static_cast<Index>(std::llround(opts.guard / ts));

  ReferenceTrace total;
  total.ts = ts;
  VectorXd here = VectorXd::Zero(opts.axes);
  here(0) = lines[0].x_start;
  here(1) = lines[0].y;
  append(total, hold(here, dwell, ts));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const ScanLine& line = lines[i];
    VectorXd start = here;
    start(0) = line.x_start;
    start(1) = line.y;
    if (start != here) {
      append(total, plan_move(here, start, lims, ts));
      append(total, hold(start, dwell, ts));
    }
    VectorXd stop = start;
    stop(0) = line.x_end;
    const MovePlan px = plan_profile(line.x_end - line.x_start, x_limits, ts);
    const Index offset = append(total, plan_move(start, stop, lims, ts));
    Window cv;
    cv.begin = offset + 4 * px.n_s + 2 * px.n_j + px.n_a;
    cv.end = cv.begin + px.n_v + 1;
    cv.die = static_cast<int>(i);
    Window ex{cv.begin + guard, cv.end - guard, cv.die};
    if (ex.end <= ex.begin) {
      throw Error(ErrorCode::InvalidArgument, "guard time leaves no exposure window on scan line " + std::to_string(i));
    }
    total.cv_windows.push_back(cv);
    total.exposure_windows.push_back(ex);
    here = stop;
    append(total, hold(here, dwell, ts));
  }
  total.scan_axis = 0;
  return total;
}

}  // namespace flexctl
