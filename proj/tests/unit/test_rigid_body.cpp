#include <doctest.h>

#include <cmath>
#include <numbers>

#include "flexctl/discretize.hpp"
#include "flexctl/error.hpp"
#include "flexctl/rigid_body.hpp"

using namespace flexctl;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTs = 50e-6;

// Spectral radius of the sampled loop: ZOH double integrator 1/(m s^2)
// with the two PID sections in negative feedback, assembled by hand.
double loop_radius(const PidAxisDesign& d) {
  const double m = d.mass;
  // Plant x = (pos, vel).
  MatrixXd ap(2, 2);
  ap << 1, kTs, 0, 1;
  VectorXd bp(2);
  bp << kTs * kTs / (2 * m), kTs / m;
  // Each DF2T section: s' = A s + B x, y = C s + D x.
  auto sec = [](const Biquad& q, MatrixXd& a, VectorXd& b, RowVectorXd& c, double& dd) {
    a.resize(2, 2);
    a << -q.a1, 1, -q.a2, 0;
    b.resize(2);
    b << q.b1 - q.a1 * q.b0, q.b2 - q.a2 * q.b0;
    c.resize(2);
    c << 1, 0;
    dd = q.b0;
  };
  MatrixXd a1, a2;
  VectorXd b1, b2;
  RowVectorXd c1, c2;
  double d1 = 0, d2 = 0;
  sec(d.lead_integrator, a1, b1, c1, d1);
  sec(d.lowpass, a2, b2, c2, d2);
  // e = -pos; v = C1 s1 + D1 e; u = C2 s2 + D2 v.
  MatrixXd a = MatrixXd::Zero(6, 6);
  RowVectorXd e_row = RowVectorXd::Zero(6);
  e_row(0) = -1.0;
  RowVectorXd v_row = d1 * e_row;
  v_row.segment(2, 2) += c1;
  RowVectorXd u_row = d2 * v_row;
  u_row.segment(4, 2) += c2;
  a.topLeftCorner(2, 2) = ap;
  a.topRows(2) += bp * u_row;
  a.block(2, 2, 2, 2) = a1;
  a.middleRows(2, 2) += b1 * e_row;
  a.block(4, 4, 2, 2) = a2;
  a.middleRows(4, 2) += b2 * v_row;
  return spectral_radius(a);
}

}  // namespace

TEST_SUITE("rigid-body-control") {
  TEST_CASE("unit open-loop gain at the bandwidth") {
    for (double f : {50.0, 120.0, 80.0}) {
      for (double m : {1.0, 20.0}) {
        const PidAxisDesign d = design_pid(f, kTs, m);
        const double w = 2 * kPi * f;
        const Complex l = d.continuous_response(w) / (m * Complex(-w * w, 0.0));
        CHECK(std::abs(l) == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("discrete sections are the bilinear map of the prototype") {
    const PidAxisDesign d = design_pid(120.0, kTs);
    for (double f : {5.0, 120.0, 900.0, 4000.0}) {
      const double wd = 2 * kPi * f;
      const double wa = 2.0 / kTs * std::tan(wd * kTs / 2.0);
      const Complex ref = d.continuous_response(wa);
      CHECK(std::abs(d.discrete_response(wd) - ref) <= 1e-9 * std::abs(ref));
    }
  }

  TEST_CASE("bilinear_biquad by direct substitution") {
    const Biquad q = bilinear_biquad(1.0, 3.0, 2.0, 0.5, 4.0, 7.0, 0.01);
    const double w = 20.0;
    const Complex z = std::polar(1.0, w * 0.01);
    const Complex s = 2.0 / 0.01 * (z - 1.0) / (z + 1.0);
    const Complex ref = (s * s + 3.0 * s + 2.0) / (0.5 * s * s + 4.0 * s + 7.0);
    CHECK(std::abs(q.response(w, 0.01) - ref) < 1e-12 * std::abs(ref));
  }

  TEST_CASE("sampled double-integrator loop is stable for the rule") {
    for (double f : {20.0, 80.0, 120.0, 300.0}) {
      CHECK(loop_radius(design_pid(f, kTs)) < 1.0);
    }
  }

  TEST_CASE("controller steps its sections in cascade") {
    const PidAxisDesign d = design_pid(100.0, kTs);
    RigidBodyController c({d, d});
    Biquad a = d.lead_integrator, b = d.lowpass;
    a.reset();
    b.reset();
    for (int k = 0; k < 20; ++k) {
      const double e = std::sin(0.1 * k);
      const VectorXd u = c.step(VectorXd{{e, 0.0}});
      CHECK(u(0) == doctest::Approx(b.step(a.step(e))).epsilon(1e-14));
      CHECK(u(1) == 0.0);
    }
    CHECK_THROWS_AS(c.step(VectorXd::Zero(3)), Error);
  }

  TEST_CASE("resonance advisory and Nyquist guard") {
    CHECK(design_pid(120.0, kTs, 1.0, 1050.0).warning.find("exceeds") != std::string::npos);
    CHECK(design_pid(100.0, kTs, 1.0, 1050.0).warning.empty());
    CHECK_THROWS_AS(design_pid(2000.0, kTs), Error);
  }

  TEST_CASE("feedforward is mass times acceleration plus snap gain") {
    FeedforwardDesign f = FeedforwardDesign::mass_only(2, 3.0);
    f.snap_gain = VectorXd{{1e-6, 0.0}};
    const VectorXd u = f.step(VectorXd{{2.0, -1.0}}, VectorXd{{1e5, 1e5}});
    CHECK(u(0) == doctest::Approx(6.1));
    CHECK(u(1) == doctest::Approx(-3.0));
    f.enabled = false;
    CHECK(f.step(VectorXd{{2.0, -1.0}}, VectorXd{{1.0, 1.0}}).norm() == 0.0);
  }
}
