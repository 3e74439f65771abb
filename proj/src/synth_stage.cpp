#include "flexctl/synth_stage.hpp"

#include <cmath>
#include <numbers>

namespace flexctl {

MechModel synth_stage(const SynthStageParams& prm) {
  const double w1 = 2.0 * std::numbers::pi * prm.f1;
  const double w2 = 2.0 * std::numbers::pi * prm.f2;
  MechModel m;
  m.M = VectorXd{{prm.mass, prm.mass, prm.inertia, 1.0, 1.0}}.asDiagonal();
  m.K = VectorXd{{0.0, 0.0, 0.0, w1 * w1, w2 * w2}}.asDiagonal();
  m.D = VectorXd{{0.0, 0.0, 0.0, 2.0 * prm.zeta1 * w1, 2.0 * prm.zeta2 * w2}}.asDiagonal();

  m.Phi_a = MatrixXd::Zero(5, 3);
  m.Phi_a.topRows(3).setIdentity();
  m.Phi_a.row(3) << 0.05, 0.02, 0.03;
  m.Phi_a.row(4) << 0.02, 0.04, 0.03;

  // Columns: x, y, Rz, eta1, eta2; coefficient (v, w) multiplies qx^v qy^w.
  PositionPolynomial s(3, 5, 1, 1);
  MatrixXd& c00 = s.coefficient(0, 0);
  MatrixXd& c10 = s.coefficient(1, 0);
  MatrixXd& c01 = s.coefficient(0, 1);
  MatrixXd& c11 = s.coefficient(1, 1);
  c00.leftCols(3).setIdentity();
  c01(0, 2) = -1.0;
  c10(1, 2) = 1.0;

  c00(0, 3) = 0.07;  c10(0, 3) = 0.07;  c01(0, 3) = 0.056;  c11(0, 3) = 0.28;
  c00(1, 3) = 0.02;  c10(1, 3) = 0.02;  c01(1, 3) = -0.02;
  c00(2, 3) = 0.03;  c01(2, 3) = -0.03;

  c00(0, 4) = 0.03;  c10(0, 4) = -0.03; c01(0, 4) = 0.03;
  c00(1, 4) = 0.05;  c01(1, 4) = 0.05;
  c00(2, 4) = 0.02;  c10(2, 4) = 0.02;
  m.Phi_s = s;

  m.workspace = {-prm.half_width, prm.half_width, -prm.half_width, prm.half_width};
  return m;
}

}  // namespace flexctl
