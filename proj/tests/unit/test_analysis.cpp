#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "flexctl/analysis.hpp"
#include "flexctl/error.hpp"
#include "flexctl/loop_model.hpp"
#include "oracles.hpp"

using namespace flexctl;

namespace {

constexpr double kPi = std::numbers::pi;

struct Fixture {
  Config cfg = default_config();
  PlantStack stack;
  ControllerDesign design;

  Fixture() {
    stack = build_plant(cfg);
    design = design_controllers(cfg, stack);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("grids") {
    const VectorXd g = log_grid(10.0, 1000.0, 3);
    CHECK(g(0) == doctest::Approx(10.0));
    CHECK(g(1) == doctest::Approx(100.0));
    CHECK(g(2) == doctest::Approx(1000.0));
    const VectorXd l = linear_grid(1.0, 2.0, 5);
    CHECK(l(2) == doctest::Approx(1.5));
  }

  TEST_CASE("Hessenberg evaluator against a dense complex solve") {
    std::mt19937_64 rng(61);
    MatrixXd a = oracle::random_matrix(rng, 12, 12);
    a /= 1.05 * spectral_radius(a);
    const MatrixXd b = oracle::random_matrix(rng, 12, 2);
    const MatrixXd c = oracle::random_matrix(rng, 3, 12);
    const FrequencyEvaluator ev(a, b, c, 1e-3);
    for (double f : {1.0, 37.0, 250.0, 499.0}) {
      const MatrixXcd ref = oracle::discrete_frf(a, b, c, 1e-3, f);
      CHECK((ev.at(f) - ref).norm() <= 1e-10 * ref.norm());
      CHECK(std::abs(ev.at(f, 2, 1) - ref(2, 1)) <= 1e-10 * ref.norm());
    }
  }

  TEST_CASE("equivalent mechanics FRF is the open frozen loop") {
    const Fixture& f = fixture();
    const SchedulingPoint p{0.15, 0.15};
    const VectorXd grid = log_grid(100.0, 3000.0, 7);
    for (bool flex : {false, true}) {
      const FrfData d = equivalent_mechanics_frf(f.stack, f.design, p, flex, grid);
      const LoopModel m = frozen_loop(f.stack, f.design, p, flex, false);
      for (Index i = 0; i < grid.size(); ++i) {
        const MatrixXcd ref = oracle::discrete_frf(m.a, m.b, m.c, f.stack.ts, grid(i));
        CHECK((d.response[static_cast<std::size_t>(i)] - ref).norm() <= 1e-8 * ref.norm());
      }
    }
  }

  TEST_CASE("rigid-body FRF far below the resonance is 1/(j w)^2 after ZOH") {
    const Fixture& f = fixture();
    const FrfData d = equivalent_mechanics_frf(f.stack, f.design, {0, 0}, false, VectorXd::Constant(1, 20.0));
    const double w = 2 * kPi * 20.0;
    CHECK(std::abs(d.response[0](0, 0)) == doctest::Approx(1.0 / (w * w)).epsilon(1e-3));
  }

  TEST_CASE("mode suppression at the workspace center") {
    const Fixture& f = fixture();
    const PeakSuppression s = mode_suppression(f.stack, f.design, {0, 0}, 0, f.cfg.analysis);
    CHECK(s.law_db == doctest::Approx(20 * std::log10(8.0)).epsilon(1e-12));
    CHECK(std::abs(s.db - s.law_db) < 1.5);
    CHECK(std::abs(s.f_peak_off - 1050.0) < 5.0);
    CHECK(s.peak_off > s.peak_on);
  }

  TEST_CASE("suppression_db on a shared grid") {
    FrfData off, on;
    off.freq_hz = on.freq_hz = VectorXd{{1.0, 2.0, 3.0}};
    for (double v : {1.0, 10.0, 1.0}) off.response.push_back(MatrixXcd::Constant(1, 1, Complex(v, 0)));
    for (double v : {1.0, 1.0, 1.0}) on.response.push_back(MatrixXcd::Constant(1, 1, Complex(0, v)));
    CHECK(suppression_db(off, on, 1.5, 2.5) == doctest::Approx(20.0));
    CHECK_THROWS_AS(suppression_db(off, on, 5.0, 6.0), Error);
  }

  TEST_CASE("moving statistics against the brute-force window") {
    std::mt19937_64 rng(62);
    const VectorXd e = oracle::random_matrix(rng, 300, 1);
    const double ts = 1e-3;
    const MovingStats m = moving_stats(e, ts, 0.02);
    const Index half = 10;
    CHECK(m.left == half);
    CHECK(std::isnan(m.ma(0)));
    CHECK(std::isnan(m.msd(299)));
    for (Index k = half; k < 300 - half; k += 7) {
      CHECK(m.ma(k) == doctest::Approx(oracle::moving_mean(e, k, half)).epsilon(1e-12));
      CHECK(m.msd(k) == doctest::Approx(oracle::moving_std(e, k, half)).epsilon(1e-10));
    }
    CHECK_THROWS_AS(moving_stats(e, ts, 1.0), Error);
  }

  TEST_CASE("sinusoid over whole periods: MA 0, MSD A/sqrt(2)") {
    const double ts = 50e-6, a = 3e-9;
    VectorXd e(20000);
    for (Index k = 0; k < e.size(); ++k) e(k) = a * std::sin(2 * kPi * 1000.0 * k * ts + 0.3);
    const MovingStats m = moving_stats(e, ts, 0.005);
    for (Index k = m.left; k < e.size() - m.right; k += 101) {
      CHECK(std::abs(m.ma(k)) <= 1e-3 * a);
      CHECK(std::abs(m.msd(k) - a / std::sqrt(2.0)) <= 1e-3 * a / std::sqrt(2.0));
    }
  }

  TEST_CASE("exposure metrics take the peak inside each window") {
    MatrixXd e = MatrixXd::Zero(2, 1000);
    for (Index k = 400; k < 420; ++k) e(0, k) = 1.0;
    const std::vector<Window> w{{100, 300, 0}, {350, 600, 1}};
    const ExposureMetrics m = ma_msd(e, 1e-3, w, 0.01);
    CHECK(m.entries.size() == 4);
    CHECK(m.at(0, 0).msd_peak == 0.0);
    CHECK(m.at(1, 0).msd_peak > 0.4);
    CHECK(m.at(1, 1).ma_peak == 0.0);
    CHECK(m.worst_msd(0) == m.at(1, 0).msd_peak);
  }

  TEST_CASE("cumulative PSD terminal value equals the variance") {
    std::mt19937_64 rng(63);
    std::normal_distribution<double> n(0.0, 2e-9);
    VectorXd x(1 << 16);
    for (Index k = 0; k < x.size(); ++k) x(k) = n(rng) + 5e-9;
    const CumulativePsd c = cumulative_psd(x, 50e-6, 2048);
    const double var = (x.array() - x.mean()).square().mean();
    CHECK(c.variance == doctest::Approx(var).epsilon(1e-12));
    CHECK(std::abs(c.cumulative(c.cumulative.size() - 1) - var) <= 0.05 * var);
    for (Index i = 1; i < c.cumulative.size(); ++i) CHECK(c.cumulative(i) >= c.cumulative(i - 1));
    CHECK_THROWS_AS(cumulative_psd(x.head(100), 50e-6, 2048), Error);
  }

  TEST_CASE("cumulative PSD of a tone steps at the tone") {
    const double ts = 50e-6;
    VectorXd x(1 << 14);
    for (Index k = 0; k < x.size(); ++k) x(k) = std::sin(2 * kPi * 1050.0 * k * ts);
    const CumulativePsd c = cumulative_psd(x, ts, 2048);
    CHECK(c.band_power(945.0, 1155.0) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(c.band_power(0.0, 900.0) < 1e-4);
    // Parseval on one short record.
    const VectorXd seg = x.head(512).array() - x.head(512).mean();
    const CumulativePsd one = cumulative_psd(seg, ts, 512);
    CHECK(one.variance == doctest::Approx(oracle::periodogram_power(seg)).epsilon(1e-10));
  }
}
