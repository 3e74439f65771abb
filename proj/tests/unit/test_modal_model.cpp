#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "flexctl/error.hpp"
#include "flexctl/modal_model.hpp"
#include "flexctl/synth_stage.hpp"
#include "oracles.hpp"

using namespace flexctl;

namespace {

std::vector<SchedulingPoint> probe_points() {
  return {{0.0, 0.0}, {0.15, -0.15}, {-0.1, 0.07}, {0.03, 0.15}};
}

}  // namespace

TEST_SUITE("modal-model") {
  TEST_CASE("SynthStage frequencies and damping") {
    const ModalForm m = to_modal(synth_stage());
    REQUIRE(m.modes() == 5);
    CHECK(m.n_rigid == 3);
    CHECK(m.omega(3) == doctest::Approx(2 * std::numbers::pi * 1050.0).epsilon(1e-12));
    CHECK(m.omega(4) == doctest::Approx(2 * std::numbers::pi * 1800.0).epsilon(1e-12));
    CHECK(m.zeta(3) == doctest::Approx(0.001).epsilon(1e-10));
    CHECK(m.zeta(4) == doctest::Approx(0.002).epsilon(1e-10));
  }

  TEST_CASE("random models: mass normalization and eigenvalues of M^-1 K") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
      const MechModel model = oracle::random_mech_model(rng, 2, 4, 200.0, 3000.0);
      const ModalForm m = to_modal(model);
      const Index n = model.n_x();
      const MatrixXd& v = m.vtilde;
      CHECK((v.transpose() * model.M * v - MatrixXd::Identity(n, n)).norm() < 1e-8);
      const MatrixXd kd = v.transpose() * model.K * v;
      CHECK((kd - MatrixXd(m.omega.array().square().matrix().asDiagonal())).norm() < 1e-7 * kd.norm());

      Eigen::EigenSolver<MatrixXd> es(model.M.inverse() * model.K);
      std::vector<double> ref;
      for (Index i = 0; i < n; ++i) ref.push_back(std::sqrt(std::max(es.eigenvalues()(i).real(), 0.0)));
      std::sort(ref.begin(), ref.end());
      CHECK(m.n_rigid == 2);
      for (Index i = 2; i < n; ++i) CHECK(m.omega(i) == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-8));
    }
  }

  TEST_CASE("rigid cluster basis does not depend on the eigensolver's rotation") {
    const MechModel model = synth_stage();
    const ModalForm a = to_modal(model);
    // Same model with the rigid coordinates permuted; the canonical basis
    // must map back to the same physical shapes.
    MatrixXd perm = MatrixXd::Identity(5, 5);
    perm.row(0).swap(perm.row(1));
    MechModel b = model;
    b.M = perm * model.M * perm.transpose();
    b.K = perm * model.K * perm.transpose();
    b.D = perm * model.D * perm.transpose();
    b.Phi_a = perm * model.Phi_a;
    b.Phi_s = model.Phi_s * perm.transpose();
    const ModalForm mb = to_modal(b);
    const MatrixXd shapes_a = a.vtilde.leftCols(3);
    const MatrixXd shapes_b = perm.transpose() * mb.vtilde.leftCols(3);
    // Both span the same space with the same mass normalization.
    const MatrixXd t = shapes_a.completeOrthogonalDecomposition().solve(shapes_b);
    CHECK((shapes_a * t - shapes_b).norm() < 1e-10);
    CHECK((t.transpose() * t - MatrixXd::Identity(3, 3)).norm() < 1e-10);
  }

  TEST_CASE("validation errors") {
    MechModel m = synth_stage();
    m.M(0, 1) = 1.0;
    CHECK_THROWS_AS(to_modal(m), Error);
    m = synth_stage();
    m.D(3, 4) = m.D(4, 3) = 5.0;
    try {
      to_modal(m);
      FAIL("expected NonProportionalDamping");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonProportionalDamping);
    }
  }

  TEST_CASE("decoupling: T_y C_RB = I and unit velocity input rows") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 5; ++trial) {
      const MechModel model = oracle::random_mech_model(rng, 3, 3, 300.0, 2000.0);
      const DecoupledPlant d = decouple(group_and_partition(to_modal(model)));
      const Index nr = d.n_rb();
      CHECK((velocity_selector(nr) * d.b_rb - MatrixXd::Identity(nr, nr)).norm() < 1e-10);
      CHECK((position_selector(nr) * d.b_rb).norm() < 1e-12);
      for (const SchedulingPoint& p : probe_points()) {
        const MatrixXd c = d.c_rb_at(p);
        CHECK((c - position_selector(nr)).norm() < 1e-9);
      }
    }
  }

  TEST_CASE("decoupled transfer at low frequency is a diagonal double integrator") {
    const DecoupledPlant d = decouple(group_and_partition(to_modal(synth_stage())));
    const FrozenPlant f = freeze(d, {0.1, -0.05});
    const double w = 2.0 * std::numbers::pi * 1.0;
    MatrixXcd m = -f.a.cast<Complex>();
    m.diagonal().array() += Complex(0.0, w);
    const MatrixXcd g = f.c.cast<Complex>() * m.fullPivLu().solve(f.b.cast<Complex>());
    const Complex expect = 1.0 / Complex(-w * w, 0.0);
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 3; ++j) {
        const double dev = std::abs(g(i, j) - (i == j ? expect : 0.0)) / std::abs(expect);
        CHECK(dev < 1e-4);
      }
    }
  }

  TEST_CASE("compliance correction equals -C A^-1 B of the discarded modes") {
    std::mt19937_64 rng(13);
    int modes = 0;
    for (int trial = 0; trial < 4; ++trial) {
      const MechModel model = oracle::random_mech_model(rng, 2, 4, 100.0, 4000.0);
      const DecoupledPlant d = decouple(group_and_partition(to_modal(model)));
      for (Index drop = 1; drop < 4; ++drop) {
        std::vector<Index> keep;
        for (Index k = 0; k < 4; ++k)
          if (k != drop) keep.push_back(k);
        const TruncatedPlant t = truncate(d, keep);
        for (const SchedulingPoint& p : probe_points()) {
          const MatrixXd a = d.raw.a_fm.block(2 * drop, 2 * drop, 2, 2);
          const MatrixXd b = d.b_fm.middleRows(2 * drop, 2);
          const MatrixXd c = d.raw.c_fm.evaluate(p).middleCols(2 * drop, 2);
          const MatrixXd ref = -c * a.fullPivLu().solve(b);
          CHECK((t.dc_raw.evaluate(p) - ref).norm() <= 1e-10 * ref.norm());
        }
        ++modes;
      }
    }
    CHECK(modes == 12);
  }

  TEST_CASE("freeze rejects points outside the workspace") {
    const DecoupledPlant d = decouple(group_and_partition(to_modal(synth_stage())));
    CHECK_THROWS_AS(freeze(d, {0.2, 0.0}), Error);
    CHECK_NOTHROW(freeze(d, {0.2, 0.0}, true));
  }

  TEST_CASE("truncation keeps the selected blocks") {
    const DecoupledPlant d = decouple(group_and_partition(to_modal(synth_stage())));
    const TruncatedPlant t = truncate(d, {0});
    CHECK(t.states() == 8);
    CHECK(t.discard == std::vector<Index>{1});
    CHECK((t.a.block(6, 6, 2, 2) - mode_block(d.raw.omega(3), d.raw.zeta(3))).norm() < 1e-9);
    const SchedulingPoint p{0.05, 0.05};
    CHECK((t.c_at(p).middleCols(6, 2) - d.c_fm_at(p).leftCols(2)).norm() < 1e-12);
  }
}
