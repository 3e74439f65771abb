#pragma once

#include <optional>
#include <vector>

#include "flexctl/linalg.hpp"
#include "flexctl/polynomial.hpp"

namespace flexctl {

struct ModelTolerances {
  double symmetry = 1e-9;          // relative Frobenius asymmetry of M, D, K
  double rigid_omega = 1e-6;       // rad/s, modes below are rigid
  double damping_offdiag = 1e-6;   // off-diagonal / diagonal Frobenius mass of V'DV
  double max_condition = 1e8;      // decoupling pseudoinverses
};

struct MechModel {
  MatrixXd M;
  MatrixXd D;
  MatrixXd K;
  MatrixXd Phi_a;              // n_x x n_u
  PositionPolynomial Phi_s;    // n_y x n_x
  Workspace workspace;

  Index n_x() const { return M.rows(); }
  Index n_u() const { return Phi_a.cols(); }
  Index n_y() const { return Phi_s.rows(); }

  void validate(const ModelTolerances& tol = {}) const;
};

struct ModalForm {
  VectorXd omega;             // ascending, rigid modes first
  VectorXd zeta;
  MatrixXd vtilde;            // mass-normalized eigenvectors (columns)
  MatrixXd b_modal;           // vtilde' Phi_a
  PositionPolynomial c_modal; // Phi_s(p) vtilde
  Index n_rigid = 0;
  Workspace workspace;

  Index modes() const { return omega.size(); }
};

ModalForm to_modal(const MechModel& model, const ModelTolerances& tol = {});

// Second-order companion block [[0, 1], [-w^2, -2 z w]].
MatrixXd mode_block(double omega, double zeta);

// Grouped per-mode (position, velocity) states, rigid modes first.
struct PartitionedLpvPlant {
  Index n_rb = 0;
  Index n_fm = 0;
  VectorXd omega;  // all modes
  VectorXd zeta;
  MatrixXd a_rb;   // 2 n_rb square
  MatrixXd a_fm;   // 2 n_fm square
  MatrixXd b_rb;   // 2 n_rb x n_u
  MatrixXd b_fm;   // 2 n_fm x n_u
  PositionPolynomial c_rb;  // n_y x 2 n_rb
  PositionPolynomial c_fm;  // n_y x 2 n_fm
  // Leading n_rb x n_rb block of the rigid eigenvectors. The first n_rb
  // physical coordinates are taken as the rigid-body axes, so
  // axis displacement = rigid_shapes * q_RB.
  MatrixXd rigid_shapes;
  Workspace workspace;

  Index states() const { return 2 * (n_rb + n_fm); }
  Index inputs() const { return b_rb.cols(); }
  Index outputs() const { return c_rb.rows(); }
  MatrixXd a() const;
  MatrixXd b() const;
  PositionPolynomial c() const;
};

PartitionedLpvPlant group_and_partition(const ModalForm& modal);

// Selector I_n (x) (1 0) or I_n (x) (0 1), shape n x 2n.
MatrixXd position_selector(Index n);
MatrixXd velocity_selector(Index n);

// T_y(p): pseudoinverse of the rigid-body position columns of C_RB(p).
// Stored as an exact polynomial (adjugate over a constant determinant) when
// available, otherwise evaluated per point.
class OutputDecoupler {
 public:
  OutputDecoupler() = default;
  explicit OutputDecoupler(PositionPolynomial c_rb_pos, double max_condition);

  MatrixXd evaluate(const SchedulingPoint& p) const;
  bool exact() const { return exact_.has_value(); }
  const std::optional<PositionPolynomial>& polynomial() const { return exact_; }

 private:
  PositionPolynomial c_rb_pos_;
  std::optional<PositionPolynomial> exact_;
  double max_condition_ = 1e8;
};

struct DecoupledPlant {
  PartitionedLpvPlant raw;
  MatrixXd t_u;             // n_u x n_rb
  OutputDecoupler t_y;      // n_rb x n_y
  MatrixXd b_rb;            // raw.b_rb t_u, velocity rows = I
  MatrixXd b_fm;            // raw.b_fm t_u
  std::optional<PositionPolynomial> c_fm_poly;  // T_y C_FM when T_y is exact
  double input_condition = 0.0;

  Index n_rb() const { return raw.n_rb; }
  Index n_fm() const { return raw.n_fm; }
  Index states() const { return raw.states(); }
  const Workspace& workspace() const { return raw.workspace; }

  MatrixXd a() const { return raw.a(); }
  MatrixXd b() const;
  MatrixXd c_rb_at(const SchedulingPoint& p) const;
  MatrixXd c_fm_at(const SchedulingPoint& p) const;
  MatrixXd c_at(const SchedulingPoint& p) const;
};

// Builds T_u and T_y(p) and verifies the decoupling invariant on a
// grid_n x grid_n workspace grid.
DecoupledPlant decouple(const PartitionedLpvPlant& plant, const ModelTolerances& tol = {},
                        int grid_n = 5);

struct FrozenPlant {
  MatrixXd a;
  MatrixXd b;
  MatrixXd c;
  MatrixXd d;
  SchedulingPoint p;
};

FrozenPlant freeze(const DecoupledPlant& plant, const SchedulingPoint& p,
                   bool allow_extrapolation = false);

struct TruncatedPlant {
  DecoupledPlant plant;
  std::vector<Index> keep;     // flexible-mode indices (0 = first flexible mode)
  std::vector<Index> discard;
  MatrixXd a;                  // blockdiag(A_RB, A_FM^r)
  MatrixXd b;                  // (I; B_FM^r)
  PositionPolynomial dc_raw;   // sum over discarded c_raw b / w^2, before T_y
  std::optional<PositionPolynomial> dc_poly;  // T_y dc_raw when T_y is exact

  Index n_rb() const { return plant.n_rb(); }
  Index states() const { return a.rows(); }
  Index retained() const { return static_cast<Index>(keep.size()); }
  // Row offset of retained flexible mode j in the truncated state.
  Index flex_offset(Index j) const { return 2 * n_rb() + 2 * j; }

  MatrixXd c_at(const SchedulingPoint& p) const;   // (I  T_y C_FM^r)
  MatrixXd dc_at(const SchedulingPoint& p) const;  // T_y dc_raw
};

TruncatedPlant truncate(const DecoupledPlant& plant, std::vector<Index> keep);

}  // namespace flexctl
