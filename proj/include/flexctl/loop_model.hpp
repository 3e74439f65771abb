#pragma once

#include <vector>

#include "flexctl/design.hpp"
#include "flexctl/flex_control.hpp"

namespace flexctl {

// Discrete state-space form of one or more cascaded biquads (DF2T states).
struct SectionModel {
  MatrixXd a;
  VectorXd b;
  RowVectorXd c;
  double d = 0.0;
};

SectionModel cascade_model(const std::vector<Biquad>& sections);

// Frozen interconnection at p with input u and output y_RB:
//   rb_closed = false: u is added to u~ with K_RB open,
//   rb_closed = true:  u is the decoupled reference, K_RB closed.
// The state stacks plant, local observers, band-pass filters and PID
// sections. Feedforward is not part of the loop.
struct LoopModel {
  MatrixXd a;
  MatrixXd b;
  MatrixXd c;
  Index plant_states = 0;
  Index observer_states = 0;  // all local observers together

  Index states() const { return a.rows(); }
};

LoopModel frozen_loop(const PlantStack& stack, const ControllerDesign& design, const SchedulingPoint& p, bool flex,
                      bool rb_closed);

}  // namespace flexctl
