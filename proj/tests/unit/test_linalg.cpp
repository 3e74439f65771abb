#include <doctest.h>

#include <random>

#include "flexctl/error.hpp"
#include "flexctl/linalg.hpp"
#include "flexctl/polynomial.hpp"
#include "oracles.hpp"

using namespace flexctl;

TEST_SUITE("linalg") {
  TEST_CASE("pseudoinverse satisfies the Penrose conditions") {
    std::mt19937_64 rng(1);
    const MatrixXd a = oracle::random_matrix(rng, 5, 3) * oracle::random_matrix(rng, 3, 4);
    const Pseudoinverse p = pseudoinverse(a);
    CHECK(p.rank == 3);
    const MatrixXd& x = p.value;
    CHECK((a * x * a - a).norm() < 1e-10 * a.norm());
    CHECK((x * a * x - x).norm() < 1e-10 * x.norm());
    CHECK(((a * x).transpose() - a * x).norm() < 1e-10);
    CHECK(((x * a).transpose() - x * a).norm() < 1e-10);
  }

  TEST_CASE("null space is orthonormal and annihilated") {
    std::mt19937_64 rng(2);
    const MatrixXd a = oracle::random_matrix(rng, 2, 5);
    const NullSpace ns = null_space(a);
    REQUIRE(ns.basis.cols() == 3);
    CHECK((a * ns.basis).norm() < 1e-12);
    CHECK((ns.basis.transpose() * ns.basis - MatrixXd::Identity(3, 3)).norm() < 1e-12);
  }

  TEST_CASE("spectral radius of a rotation-scaling block") {
    MatrixXd a(2, 2);
    a << 0.6, -0.8, 0.8, 0.6;
    CHECK(spectral_radius(0.5 * a) == doctest::Approx(0.5).epsilon(1e-14));
  }

  TEST_CASE("block diagonal and vectorize") {
    const std::vector<MatrixXd> blocks{MatrixXd::Constant(1, 1, 2.0), MatrixXd::Constant(2, 2, 3.0)};
    const MatrixXd b = block_diagonal(blocks);
    CHECK(b.rows() == 3);
    CHECK(b(0, 0) == 2.0);
    CHECK(b(0, 1) == 0.0);
    CHECK(b(2, 2) == 3.0);
    MatrixXd m(2, 2);
    m << 1, 2, 3, 4;
    CHECK(vectorize(m) == std::vector<double>{1, 3, 2, 4});
  }
}

TEST_SUITE("modal-model") {
  TEST_CASE("polynomial evaluation is the double sum") {
    std::mt19937_64 rng(3);
    PositionPolynomial p(2, 3, 2, 1);
    for (int v = 0; v <= 2; ++v)
      for (int w = 0; w <= 1; ++w) p.coefficient(v, w) = oracle::random_matrix(rng, 2, 3);
    const SchedulingPoint q{0.3, -0.7};
    MatrixXd ref = MatrixXd::Zero(2, 3);
    for (int v = 0; v <= 2; ++v)
      for (int w = 0; w <= 1; ++w) ref += std::pow(q.qx, v) * std::pow(q.qy, w) * p.coefficient(v, w);
    CHECK((p.evaluate(q) - ref).norm() < 1e-14);
  }

  TEST_CASE("polynomial product evaluates to the pointwise product") {
    std::mt19937_64 rng(4);
    PositionPolynomial a(2, 2, 1, 1);
    PositionPolynomial b(2, 3, 2, 0);
    for (int v = 0; v <= 1; ++v)
      for (int w = 0; w <= 1; ++w) a.coefficient(v, w) = oracle::random_matrix(rng, 2, 2);
    for (int v = 0; v <= 2; ++v) b.coefficient(v, 0) = oracle::random_matrix(rng, 2, 3);
    const PositionPolynomial c = a * b;
    for (const SchedulingPoint q : {SchedulingPoint{0.1, 0.2}, SchedulingPoint{-0.4, 0.9}}) {
      CHECK((c.evaluate(q) - a.evaluate(q) * b.evaluate(q)).norm() < 1e-13);
    }
  }

  TEST_CASE("adjugate times matrix equals determinant times identity") {
    std::mt19937_64 rng(5);
    PositionPolynomial m(3, 3, 1, 1);
    for (int v = 0; v <= 1; ++v)
      for (int w = 0; w <= 1; ++w) m.coefficient(v, w) = oracle::random_matrix(rng, 3, 3);
    const PositionPolynomial adj = adjugate(m);
    const PositionPolynomial det = determinant(m);
    const SchedulingPoint q{0.25, -0.5};
    const MatrixXd mq = m.evaluate(q);
    CHECK(det.evaluate(q)(0, 0) == doctest::Approx(mq.determinant()).epsilon(1e-12));
    CHECK((adj.evaluate(q) * mq - mq.determinant() * MatrixXd::Identity(3, 3)).norm() < 1e-12 * mq.norm());
  }

  TEST_CASE("workspace grid is x-major and includes the edges") {
    const Workspace ws{-1.0, 1.0, -2.0, 2.0};
    const auto g = ws.grid(3, 2);
    REQUIRE(g.size() == 6);
    CHECK(g[0] == SchedulingPoint{-1.0, -2.0});
    CHECK(g[1] == SchedulingPoint{-1.0, 2.0});
    CHECK(g[2] == SchedulingPoint{0.0, -2.0});
    CHECK(g[5] == SchedulingPoint{1.0, 2.0});
    CHECK(ws.center() == SchedulingPoint{0.0, 0.0});
  }
}
