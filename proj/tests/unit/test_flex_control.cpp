#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "flexctl/error.hpp"
#include "flexctl/flex_control.hpp"
#include "flexctl/synth_stage.hpp"
#include "oracles.hpp"

using namespace flexctl;

namespace {

constexpr double kPi = std::numbers::pi;

// Roots of s^2 + 2 z w s + w^2 (underdamped).
std::pair<Complex, Complex> target_roots(double z, double w) {
  const Complex r(-z * w, w * std::sqrt(1.0 - z * z));
  return {r, std::conj(r)};
}

double nearest(const Eigen::VectorXcd& ev, Complex r) {
  double best = 1e300;
  for (Index i = 0; i < ev.size(); ++i) best = std::min(best, std::abs(ev(i) - r));
  return best;
}

}  // namespace

TEST_SUITE("flex-control") {
  TEST_CASE("full-state feedback places the controlled mode exactly") {
    const DecoupledPlant d = decouple(group_and_partition(to_modal(synth_stage())));
    for (double omega_star_hz : {1050.0, 1100.0}) {
      ModalTargets t;
      t.zeta_star = VectorXd::Constant(1, 0.008);
      t.omega_star = VectorXd::Constant(1, 2 * kPi * omega_star_hz);
      const FlexGains g = design_gains(d, {0}, t);
      for (const SchedulingPoint& p : d.workspace().grid(3, 3)) {
        const FrozenPlant f = freeze(d, p);
        MatrixXd k = MatrixXd::Zero(3, f.a.rows());
        k.col(6) = g.ks.col(0);
        k.col(7) = g.kd.col(0);
        const Eigen::VectorXcd ev = (f.a + f.b * k).eigenvalues();
        const auto [r1, r2] = target_roots(0.008, t.omega_star(0));
        CHECK(nearest(ev, r1) <= 1e-8 * std::abs(r1));
        CHECK(nearest(ev, r2) <= 1e-8 * std::abs(r2));
        // Second mode untouched.
        const auto [s1, s2] = target_roots(d.raw.zeta(4), d.raw.omega(4));
        CHECK(nearest(ev, s1) <= 1e-8 * std::abs(s1));
      }
    }
  }

  TEST_CASE("two controlled modes with random actuation") {
    std::mt19937_64 rng(51);
    const MatrixXd b = oracle::random_matrix(rng, 2, 3);
    const VectorXd w{{5000.0, 9000.0}};
    const VectorXd z{{0.001, 0.002}};
    ModalTargets t;
    t.zeta_star = VectorXd{{0.01, 0.02}};
    t.omega_star = VectorXd{{5200.0, 8800.0}};
    const FlexGains g = design_gains(b, w, z, t);
    for (Index j = 0; j < 2; ++j) {
      const MatrixXd a{{0.0, 1.0}, {-w(j) * w(j), -2 * z(j) * w(j)}};
      MatrixXd acl = a;
      acl(1, 0) += b.row(j).dot(g.ks.col(j));
      acl(1, 1) += b.row(j).dot(g.kd.col(j));
      CHECK(acl(1, 0) == doctest::Approx(-t.omega_star(j) * t.omega_star(j)).epsilon(1e-12));
      CHECK(acl(1, 1) == doctest::Approx(-2 * t.zeta_star(j) * t.omega_star(j)).epsilon(1e-12));
      // Cross coupling removed.
      CHECK(std::abs(b.row(1 - j).dot(g.ks.col(j))) < 1e-6);
    }
    CHECK(g.k_fm().cols() == 4);
  }

  TEST_CASE("rank-deficient actuation and bad targets") {
    MatrixXd b = MatrixXd::Zero(2, 3);
    b(0, 0) = 1.0;
    b(1, 0) = 2.0;
    ModalTargets t;
    t.zeta_star = VectorXd{{0.01, 0.01}};
    t.omega_star = VectorXd{{1.0, 2.0}};
    CHECK_THROWS_AS(design_gains(b, VectorXd{{1.0, 2.0}}, VectorXd{{0.0, 0.0}}, t), Error);
    t.zeta_star(0) = 1.5;
    CHECK_THROWS_AS(design_gains(MatrixXd::Identity(2, 2), VectorXd{{1.0, 2.0}}, VectorXd{{0.0, 0.0}}, t), Error);
  }

  TEST_CASE("biquad step equals the difference equation") {
    Biquad q{0.2, -0.1, 0.05, -1.1, 0.4};
    std::mt19937_64 rng(52);
    std::normal_distribution<double> n;
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (int k = 0; k < 200; ++k) {
      const double x = n(rng);
      const double y = 0.2 * x - 0.1 * x1 + 0.05 * x2 + 1.1 * y1 - 0.4 * y2;
      CHECK(q.step(x) == doctest::Approx(y).epsilon(1e-12));
      x2 = x1;
      x1 = x;
      y2 = y1;
      y1 = y;
    }
    CHECK(q.stable());
  }

  TEST_CASE("band-pass: unit gain and zero phase at the prewarped center") {
    const double w = 2 * kPi * 1050.0;
    const BandPassDesign d = make_bandpass(w, 5.0, 50e-6);
    const Complex h = d.response(w);
    CHECK(std::abs(h - Complex(1.0, 0.0)) < 1e-9);
    CHECK(d.section.stable());
    // Bilinear map: H_d(w_d) = H_c((2/Ts) tan(w_d Ts / 2)).
    for (double f : {100.0, 800.0, 2000.0, 6000.0}) {
      const double wd = 2 * kPi * f;
      const double wa = w * std::tan(wd * 50e-6 / 2.0) / std::tan(w * 50e-6 / 2.0);
      const Complex s(0.0, wa);
      const Complex hc = (w / 5.0) * s / (s * s + (w / 5.0) * s + w * w);
      CHECK(std::abs(d.response(wd) - hc * hc) < 1e-9);
    }
    // Continuous prototype check.
    const Complex s(0.0, 2 * kPi * 300.0);
    const Complex hc = (w / 5.0) * s / (s * s + (w / 5.0) * s + w * w);
    CHECK(std::abs(d.continuous_response(2 * kPi * 300.0) - hc * hc) < 1e-12);
  }

  TEST_CASE("controller output with and without the filter") {
    FlexGains g;
    g.controlled = {0};
    g.ks = MatrixXd{{1.0}, {2.0}};
    g.kd = MatrixXd{{-0.5}, {0.25}};
    const BandPassDesign bp = make_bandpass(2 * kPi * 1000.0, 5.0, 50e-6);
    FlexController bypass(g, {bp}, true);
    const VectorXd u = bypass.step(VectorXd{{3.0, 4.0}});
    CHECK(u(0) == doctest::Approx(1.0 * 3.0 - 0.5 * 4.0));
    CHECK(u(1) == doctest::Approx(2.0 * 3.0 + 0.25 * 4.0));

    FlexController filtered(g, {bp});
    BandPassFilter fq(bp), fv(bp);
    for (int k = 0; k < 50; ++k) {
      const double q = std::sin(0.3 * k);
      const double v = std::cos(0.2 * k);
      const VectorXd out = filtered.step(VectorXd{{q, v}});
      const double a = fq.step(q);
      const double b = fv.step(v);
      CHECK(out(0) == doctest::Approx(a - 0.5 * b).epsilon(1e-12).scale(1e-12));
    }
    filtered.reset();
    CHECK(filtered.step(VectorXd::Zero(2)).norm() == 0.0);
  }
}
