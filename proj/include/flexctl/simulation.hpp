#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flexctl/config.hpp"
#include "flexctl/design.hpp"
#include "flexctl/trajectory.hpp"

namespace flexctl {

struct SimConfig {
  double ts = 0.0;
  bool flex = true;          // close the flexible-mode loop
  bool rb_feedback = true;   // close K_RB; when false u_injection drives u_RB alone
  std::string scheduling_source = "reference";
  std::optional<SchedulingPoint> frozen_point;  // overrides the scheduling source
  double sensor_std = 0.0;   // per sensor channel
  double force_std = 0.0;    // per actuator, N
  std::uint64_t seed = 0;
  VectorXd initial_state;    // full-model grouped state; empty means zero
  MatrixXd u_injection;      // n_rb x N, added to u~ (decoupled units)
  MatrixXd force_injection;  // n_u x N, added to the actuator force
  bool record_local = false; // keep every local prediction
  bool check_stability = false;  // frozen eigenvalue check at the grid points first

  static SimConfig from(const Config& cfg, bool flex);
};

// Per-tick record; column k belongs to tick k.
struct SimTrace {
  double ts = 0.0;
  bool flex = false;
  VectorXd t;
  MatrixXd p;             // 2 x N
  MatrixXd reference;     // n_rb x N physical axis positions
  MatrixXd y_rb;          // n_rb x N decoupled
  MatrixXd e;             // n_rb x N decoupled tracking error
  MatrixXd e_axis;        // n_rb x N tracking error in axis units (m, rad)
  MatrixXd u_rb, u_ff, u_fm, u_tilde;  // n_rb x N
  MatrixXd x;             // full-model states x N, state at tick k
  MatrixXd q_hat;         // observer states x N, q(k+1|k) formed at tick k
  MatrixXd sensor_noise;  // n_y x N
  MatrixXd force_noise;   // n_u x N
  std::vector<MatrixXd> local;  // per observer, when recorded
  std::vector<Window> cv_windows;
  std::vector<Window> exposure_windows;
  Index scan_axis = 0;

  Index samples() const { return t.size(); }
};

// Scan reference for the configured layout, one axis per rigid-body mode.
ReferenceTrace scan_reference(const Config& cfg, Index axes);

// Frozen closed-loop eigenvalue check at every observer grid point.
// Raises Unstable naming the point.
void check_stability(const PlantStack& stack, const ControllerDesign& design, bool flex);

SimTrace simulate(const PlantStack& stack, const ControllerDesign& design, const ReferenceTrace& reference,
                  const SimConfig& cfg);

struct AbTraces {
  SimTrace baseline;
  SimTrace extended;
};

// Two runs sharing designs, reference and noise seed, differing only in the
// flexible-mode loop flag.
AbTraces ab_compare(const PlantStack& stack, const ControllerDesign& design, const ReferenceTrace& reference,
                    SimConfig cfg);

}  // namespace flexctl
