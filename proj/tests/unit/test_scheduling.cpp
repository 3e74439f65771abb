#include <doctest.h>

#include <cmath>
#include <random>

#include "flexctl/error.hpp"
#include "flexctl/scheduling.hpp"
#include "oracles.hpp"

using namespace flexctl;

namespace {

// (1, qx, .., qx^mx) (x) (1, qy, .., qy^my)
RowVectorXd chi_ref(int mx, int my, const SchedulingPoint& p) {
  RowVectorXd r((mx + 1) * (my + 1));
  for (int v = 0; v <= mx; ++v)
    for (int w = 0; w <= my; ++w) r(v * (my + 1) + w) = std::pow(p.qx, v) * std::pow(p.qy, w);
  return r;
}

double hat(double lo, double hi, double x, bool upper) {
  const double t = (x - lo) / (hi - lo);
  return upper ? t : 1.0 - t;
}

}  // namespace

TEST_SUITE("scheduling-fit") {
  TEST_CASE("chi ordering") {
    const SchedulingPoint p{0.3, -0.2};
    CHECK((eval_chi({2, 1}, p) - chi_ref(2, 1, p)).norm() < 1e-15);
    CHECK(SpatialBasis{2, 1}.size() == 6);
  }

  TEST_CASE("corner grid recovers the bilinear hat functions") {
    const Workspace ws{-0.15, 0.15, -0.15, 0.15};
    const auto grid = ws.grid(2, 2);
    const WeightingScheme w = solve_lse(constraint_system({1, 1}, grid));
    CHECK_FALSE(w.report.infeasible_constraints);
    CHECK(w.report.constraint_residual < 1e-12);
    const RowVectorXd c = w.weights(ws.center());
    for (Index i = 0; i < 4; ++i) CHECK(std::abs(c(i) - 0.25) <= 1e-9);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-0.15, 0.15);
    for (int k = 0; k < 20; ++k) {
      const SchedulingPoint p{u(rng), u(rng)};
      const RowVectorXd wp = w.weights(p);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool ux = grid[i].qx > 0.0;
        const bool uy = grid[i].qy > 0.0;
        const double ref = hat(-0.15, 0.15, p.qx, ux) * hat(-0.15, 0.15, p.qy, uy);
        CHECK(std::abs(wp(static_cast<Index>(i)) - ref) < 1e-12);
      }
      CHECK(std::abs(wp.sum() - 1.0) < 1e-12);
    }
  }

  TEST_CASE("3x3 grid with a bilinear basis is infeasible") {
    const Workspace ws{-0.15, 0.15, -0.15, 0.15};
    const WeightingScheme w = solve_lse(constraint_system({1, 1}, ws.grid(3, 3)));
    CHECK(w.report.infeasible_constraints);
    CHECK(w.report.constraint_residual > 0.0);
    CHECK(w.report.constraint_rank == 36);
    CHECK_FALSE(w.report.regression_active);
  }

  TEST_CASE("3x3 grid with a biquadratic basis interpolates exactly") {
    const Workspace ws{-0.15, 0.15, -0.15, 0.15};
    const auto grid = ws.grid(3, 3);
    const WeightingScheme w = solve_lse(constraint_system({2, 2}, grid));
    CHECK_FALSE(w.report.infeasible_constraints);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const RowVectorXd wj = w.weights(grid[j]);
      for (Index i = 0; i < 9; ++i) CHECK(std::abs(wj(i) - (i == static_cast<Index>(j) ? 1.0 : 0.0)) < 1e-10);
    }
  }

  TEST_CASE("planted weights are identified from training data") {
    std::mt19937_64 rng(42);
    const std::vector<SchedulingPoint> grid{{-0.1, -0.1}, {0.1, 0.0}, {0.0, 0.1}};
    const int mx = 1, my = 1;
    const Index n = 3, nc = 4, nq = 2;
    MatrixXd chi(n, nc);
    for (Index j = 0; j < n; ++j) chi.row(j) = chi_ref(mx, my, grid[static_cast<std::size_t>(j)]);
    // Theta_i = chi^+ e_i + z_i * kernel direction.
    Eigen::FullPivLU<MatrixXd> lu(chi);
    const MatrixXd ker = lu.kernel();
    REQUIRE(ker.cols() == 1);
    const MatrixXd part = chi.completeOrthogonalDecomposition().pseudoInverse();
    MatrixXd theta(nc, n);
    for (Index i = 0; i < n; ++i) theta.col(i) = part.col(i) + (0.5 + static_cast<double>(i)) * ker.col(0);
    CHECK((chi * theta - MatrixXd::Identity(n, n)).norm() < 1e-12);

    const Index samples = 400;
    std::uniform_real_distribution<double> u(-0.15, 0.15);
    std::vector<SchedulingPoint> sched;
    std::vector<MatrixXd> local(3, MatrixXd(nq, samples));
    MatrixXd ref(nq, samples);
    for (Index k = 0; k < samples; ++k) {
      const SchedulingPoint p{u(rng), u(rng)};
      sched.push_back(p);
      const RowVectorXd wk = chi_ref(mx, my, p) * theta;
      ref.col(k).setZero();
      for (Index i = 0; i < n; ++i) {
        local[static_cast<std::size_t>(i)].col(k) = oracle::random_matrix(rng, nq, 1);
        ref.col(k) += wk(i) * local[static_cast<std::size_t>(i)].col(k);
      }
    }
    const WeightingScheme w = solve_lse(assemble_regression({mx, my}, grid, sched, local, ref));
    CHECK(w.report.regression_active);
    CHECK_FALSE(w.report.infeasible_constraints);
    CHECK(w.report.free_dimensions == 3);
    CHECK((w.theta - theta).norm() <= 1e-6 * theta.norm());
  }

  TEST_CASE("combine is the weighted sum") {
    const Workspace ws{-0.15, 0.15, -0.15, 0.15};
    const WeightingScheme w = solve_lse(constraint_system({1, 1}, ws.grid(2, 2)));
    std::vector<VectorXd> local{VectorXd::Constant(2, 1.0), VectorXd::Constant(2, 2.0), VectorXd::Constant(2, 3.0),
                                VectorXd::Constant(2, 4.0)};
    const VectorXd q = combine(w, ws.center(), local);
    CHECK(q(0) == doctest::Approx(2.5).epsilon(1e-12));
  }

  TEST_CASE("mismatched regression shapes are rejected") {
    const std::vector<SchedulingPoint> grid{{0, 0}, {0.1, 0}};
    std::vector<MatrixXd> local(2, MatrixXd::Zero(2, 5));
    std::vector<SchedulingPoint> sched(4);
    CHECK_THROWS_AS(assemble_regression({1, 0}, grid, sched, local, MatrixXd::Zero(2, 5)), Error);
  }
}
