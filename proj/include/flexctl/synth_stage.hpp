#pragma once

#include "flexctl/modal_model.hpp"

namespace flexctl {

// Three rigid-body axes (x, y, Rz), three actuators, three sensors and two
// flexible modes (1050 Hz, 1800 Hz) whose sensor participation varies
// bilinearly over a +-0.15 m square workspace.
struct SynthStageParams {
  double mass = 20.0;     // kg
  double inertia = 0.8;   // kg m^2
  double f1 = 1050.0;     // Hz
  double f2 = 1800.0;     // Hz
  double zeta1 = 0.001;
  double zeta2 = 0.002;
  double half_width = 0.15;  // m
};

MechModel synth_stage(const SynthStageParams& params = {});

}  // namespace flexctl
