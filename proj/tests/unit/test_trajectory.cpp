#include <doctest.h>

#include <cmath>

#include "flexctl/error.hpp"
#include "flexctl/trajectory.hpp"

using namespace flexctl;

namespace {

constexpr double kTs = 50e-6;
const MotionLimits kX{0.8, 35.0, 3500.0, 7e5};
const MotionLimits kY{0.38, 15.0, 3500.0, 7e5};

void check_bounds(const AxisSamples& s, const MotionLimits& l) {
  CHECK(s.vel.cwiseAbs().maxCoeff() <= l.v);
  CHECK(s.acc.cwiseAbs().maxCoeff() <= l.a);
  CHECK(s.jerk.cwiseAbs().maxCoeff() <= l.j);
  CHECK(s.snap.cwiseAbs().maxCoeff() <= l.s);
}

// Re-integrates the held snap sample by sample.
void check_chain(const AxisSamples& s, double ts) {
  double p = s.pos(0), v = s.vel(0), a = s.acc(0), j = s.jerk(0);
  const double scale = std::max(1.0, s.pos.cwiseAbs().maxCoeff());
  for (Index k = 0; k + 1 < s.pos.size(); ++k) {
    const double sn = s.snap(k);
    p += v * ts + a * ts * ts / 2 + j * ts * ts * ts / 6 + sn * ts * ts * ts * ts / 24;
    v += a * ts + j * ts * ts / 2 + sn * ts * ts * ts / 6;
    a += j * ts + sn * ts * ts / 2;
    j += sn * ts;
  }
  const Index e = s.pos.size() - 1;
  CHECK(std::abs(p - s.pos(e)) < 1e-9 * scale);
  CHECK(std::abs(v - s.vel(e)) < 1e-9);
  CHECK(std::abs(a - s.acc(e)) < 1e-7);
}

}  // namespace

TEST_SUITE("trajectory") {
  TEST_CASE("continuous timing: long move reaches every limit") {
    const ProfileTiming t = continuous_timing(0.24, kX);
    CHECK(t.peak_vel() == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(t.peak_acc() == doctest::Approx(35.0).epsilon(1e-9));
    CHECK(t.peak_jerk() == doctest::Approx(3500.0).epsilon(1e-9));
    CHECK(t.distance() == doctest::Approx(0.24).epsilon(1e-9));
    CHECK(t.t_v > 0.0);
  }

  TEST_CASE("continuous timing: short moves stay inside the limits") {
    for (double d : {1e-6, 1e-4, 1e-3, 0.01, 0.05}) {
      const ProfileTiming t = continuous_timing(d, kX);
      CHECK(t.distance() == doctest::Approx(d).epsilon(1e-8));
      CHECK(t.peak_vel() <= 0.8 * (1 + 1e-12));
      CHECK(t.peak_acc() <= 35.0 * (1 + 1e-12));
      CHECK(t.peak_jerk() <= 3500.0 * (1 + 1e-12));
    }
  }

  TEST_CASE("sampled profiles hit the target and respect the bounds") {
    for (double d : {0.24, -0.24, 0.05, -0.003, 1e-5, 0.3}) {
      const MovePlan p = plan_profile(d, kX, kTs);
      const AxisSamples s = sample_profile(p, 0.1);
      CHECK(std::abs(s.pos(s.pos.size() - 1) - (0.1 + d)) <= 1e-9);
      CHECK(std::abs(s.vel(s.vel.size() - 1)) <= 1e-9);
      CHECK(std::abs(s.acc(s.acc.size() - 1)) <= 1e-6);
      check_bounds(s, kX);
      check_chain(s, kTs);
    }
  }

  TEST_CASE("zero move is empty") {
    const MovePlan p = plan_profile(0.0, kX, kTs);
    CHECK(p.samples() == 0);
    CHECK(sample_profile(p, 1.0).pos.size() == 1);
  }

  TEST_CASE("invalid limits") {
    MotionLimits bad = kX;
    bad.a = 0.0;
    CHECK_THROWS_AS(plan_profile(0.1, bad, kTs), Error);
    CHECK_THROWS_AS(plan_profile(0.1, kX, 0.0), Error);
  }

  TEST_CASE("multi-axis move holds finished axes") {
    const ReferenceTrace r = plan_move(VectorXd{{0.0, 0.0}}, VectorXd{{0.2, 0.01}}, {kX, kY}, kTs);
    CHECK(r.axes() == 2);
    CHECK(std::abs(r.pos(0, r.samples() - 1) - 0.2) < 1e-9);
    CHECK(std::abs(r.pos(1, r.samples() - 1) - 0.01) < 1e-9);
    CHECK(r.vel.row(1).cwiseAbs().maxCoeff() <= kY.v);
  }

  TEST_CASE("scan windows lie on constant-velocity segments") {
    const auto lines = demo_layout();
    const ReferenceTrace r = scan_sequence(lines, kX, kY, kTs);
    REQUIRE(r.cv_windows.size() == lines.size());
    CHECK(r.axes() == 3);
    CHECK(r.pos.row(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.vel.row(0).cwiseAbs().maxCoeff() <= 0.8);
    CHECK(r.acc.row(0).cwiseAbs().maxCoeff() <= 35.0);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const Window& cv = r.cv_windows[i];
      const Window& ex = r.exposure_windows[i];
      CHECK(cv.contains(ex));
      CHECK(ex.size() > 0);
      CHECK(cv.size() - ex.size() == 2 * static_cast<Index>(std::llround(0.010 / kTs)));
      const double v = r.vel(0, cv.begin);
      CHECK(std::abs(v) <= 0.8);
      CHECK(std::abs(v) > 0.8 * (1.0 - 1e-3));
      for (Index k = cv.begin; k < cv.end; ++k) {
        CHECK(r.vel(0, k) == v);
        CHECK(r.pos(1, k) == lines[i].y);
      }
      const MovePlan px = plan_profile(lines[i].x_end - lines[i].x_start, kX, kTs);
      const Index stop = cv.end - 1 + 4 * px.n_s + 2 * px.n_j + px.n_a;
      REQUIRE(stop < r.samples());
      CHECK(std::abs(r.pos(0, stop) - lines[i].x_end) < 1e-9);
    }
  }

  TEST_CASE("guard larger than the constant-velocity time is rejected") {
    ScanOptions o;
    o.guard = 1.0;
    CHECK_THROWS_AS(scan_sequence(demo_layout(), kX, kY, kTs, o), Error);
  }
}
