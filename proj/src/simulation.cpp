#include "flexctl/simulation.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "flexctl/discretize.hpp"
#include "flexctl/error.hpp"
#include "flexctl/loop_model.hpp"

namespace flexctl {

namespace {

void require_ts(double expected, double actual, const char* what) {
  if (std::abs(expected - actual) > 1e-12 * std::abs(expected)) {
    std::ostringstream os;
    os << what << " sampled at " << actual << " s, simulation at " << expected << " s";
    throw Error(ErrorCode::TsMismatch, os.str());
  }
}

}  // namespace

SimConfig SimConfig::from(const Config& cfg, bool flex) {
  SimConfig s;
  s.ts = cfg.observer.ts;
  s.flex = flex;
  s.scheduling_source = cfg.sim.scheduling_source;
  s.sensor_std = cfg.noise.sensor_std;
  s.force_std = cfg.noise.force_std;
  s.seed = cfg.noise.seed;
  s.check_stability = cfg.sim.check_stability;
  return s;
}

ReferenceTrace scan_reference(const Config& cfg, Index axes) {
  ScanOptions opts;
  opts.guard = cfg.trajectory.guard;
  opts.dwell = cfg.trajectory.dwell;
  opts.axes = axes;
  return scan_sequence(cfg.trajectory.lines, cfg.trajectory.x, cfg.trajectory.y, cfg.observer.ts, opts);
}

void check_stability(const PlantStack& stack, const ControllerDesign& design, bool flex) {
  for (const SchedulingPoint& p : design.bank.points()) {
    const LoopModel m = frozen_loop(stack, design, p, flex, true);
    const double rho = spectral_radius(m.a);
    if (!(rho < 1.0)) {
      std::ostringstream os;
      os << (flex ? "extended" : "baseline") << " closed loop unstable at (" << p.qx << ", " << p.qy
         << "): spectral radius " << rho;
      throw Error(ErrorCode::Unstable, os.str());
    }
  }
}

SimTrace simulate(const PlantStack& stack, const ControllerDesign& design, const ReferenceTrace& reference,
                  const SimConfig& cfg) {
  const double ts = cfg.ts;
  if (!(ts > 0.0)) throw Error(ErrorCode::InvalidArgument, "Ts must be positive");
  require_ts(ts, design.ts, "design");
  require_ts(ts, design.bank.model.ts, "observer bank");
  require_ts(ts, reference.ts, "reference");
  for (const auto& bp : design.bandpass) require_ts(ts, bp.ts, "band-pass filter");
  for (const auto& pid : design.pid) require_ts(ts, pid.ts, "PID controller");
  if (cfg.scheduling_source != "reference" && cfg.scheduling_source != "measured") {
    throw Error(ErrorCode::InvalidArgument, "unknown scheduling source " + cfg.scheduling_source);
  }

  const DecoupledPlant& plant = stack.plant;
  const Index n_rb = stack.n_rb();
  const Index nx = plant.states();
  const Index nu = plant.raw.inputs();
  const Index ny = plant.raw.outputs();
  const Index n = reference.samples();
  if (n_rb < 2) throw Error(ErrorCode::DimensionMismatch, "scheduling needs the x and y rigid-body axes");
  if (reference.axes() != n_rb) throw Error(ErrorCode::DimensionMismatch, "reference needs one axis per rigid mode");
  if (cfg.u_injection.size() > 0 && (cfg.u_injection.rows() != n_rb || cfg.u_injection.cols() != n)) {
    throw Error(ErrorCode::DimensionMismatch, "u_injection must be n_rb x samples");
  }
  if (cfg.force_injection.size() > 0 && (cfg.force_injection.rows() != nu || cfg.force_injection.cols() != n)) {
    throw Error(ErrorCode::DimensionMismatch, "force_injection must be n_u x samples");
  }
  if (cfg.initial_state.size() > 0 && cfg.initial_state.size() != nx) {
    throw Error(ErrorCode::DimensionMismatch, "initial state size");
  }
  if (cfg.check_stability) {
    check_stability(stack, design, false);
    if (cfg.flex) check_stability(stack, design, true);
  }

  const ZohModel zoh = zoh_discretize(plant.a(), plant.raw.b(), ts);
  const MatrixXd bdu = zoh.b * plant.t_u;
  const PositionPolynomial c_raw = plant.raw.c();

  RigidBodyController pid(design.pid);
  FlexController flex(design.gains, design.bandpass);
  std::vector<LocalObserver> obs = design.bank.observers;
  for (auto& o : obs) o.reset();
  const std::vector<Index> offsets = design.controlled_offsets(stack);
  const Index no = design.bank.model.states();
  const Index n_ctl = design.gains.modes();

  SimTrace tr;
  tr.ts = ts;
  tr.flex = cfg.flex;
  tr.t.resize(n);
  tr.p.resize(2, n);
  tr.reference.resize(n_rb, n);
  tr.y_rb.resize(n_rb, n);
  tr.e.resize(n_rb, n);
  tr.e_axis.resize(n_rb, n);
  tr.u_rb.resize(n_rb, n);
  tr.u_ff.resize(n_rb, n);
  tr.u_fm.resize(n_rb, n);
  tr.u_tilde.resize(n_rb, n);
  tr.x.resize(nx, n);
  tr.q_hat.resize(no, n);
  tr.sensor_noise.resize(ny, n);
  tr.force_noise.resize(nu, n);
  if (cfg.record_local) tr.local.assign(obs.size(), MatrixXd(no, n));
  tr.cv_windows = reference.cv_windows;
  tr.exposure_windows = reference.exposure_windows;
  tr.scan_axis = reference.scan_axis;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  VectorXd x = cfg.initial_state.size() > 0 ? cfg.initial_state : VectorXd::Zero(nx);
  VectorXd x_next(nx);
  VectorXd q_hat = VectorXd::Zero(no);  // q(k|k-1)
  VectorXd est(2 * n_ctl);
  VectorXd v(ny), w(nu), y_phys(ny), y_rb(n_rb), e(n_rb), u_fb(n_rb), u_ff(n_rb), u_fm(n_rb), u(n_rb);
  SchedulingPoint measured;
  std::vector<VectorXd> local(obs.size());

  for (Index k = 0; k < n; ++k) {
    const VectorXd r = stack.modal_from_axis * reference.pos.col(k);
    SchedulingPoint p;
    if (cfg.frozen_point) {
      p = *cfg.frozen_point;
    } else if (cfg.scheduling_source == "measured" && k > 0) {
      p = measured;
    } else {
      p = {reference.pos(0, k), reference.pos(1, k)};
    }

    for (Index i = 0; i < ny; ++i) v(i) = cfg.sensor_std * normal(rng);
    for (Index i = 0; i < nu; ++i) w(i) = cfg.force_std * normal(rng);
    tr.sensor_noise.col(k) = v;
    tr.force_noise.col(k) = w;
    if (cfg.force_injection.size() > 0) w += cfg.force_injection.col(k);

    y_phys.noalias() = c_raw.evaluate(p) * x;
    y_phys += v;
    y_rb.noalias() = plant.t_y.evaluate(p) * y_phys;
    e = r - y_rb;

    if (cfg.rb_feedback) {
      u_fb = pid.step(e);
    } else {
      u_fb.setZero();
    }
    u_ff = design.feedforward.step(stack.modal_from_axis * reference.acc.col(k),
                                   stack.modal_from_axis * reference.snap.col(k));
    if (cfg.flex) {
      for (Index j = 0; j < n_ctl; ++j) {
        est(2 * j) = q_hat(offsets[static_cast<std::size_t>(j)]);
        est(2 * j + 1) = q_hat(offsets[static_cast<std::size_t>(j)] + 1);
      }
      u_fm = flex.step(est);
    } else {
      u_fm.setZero();
    }
    u = u_fb + u_ff + u_fm;
    if (cfg.u_injection.size() > 0) u += cfg.u_injection.col(k);

    for (std::size_t i = 0; i < obs.size(); ++i) {
      local[i] = obs[i].step(u, y_rb);
      if (cfg.record_local) tr.local[i].col(k) = local[i];
    }
    combine_into(design.weights.weights(p), local, q_hat);

    tr.t(k) = static_cast<double>(k) * ts;
    tr.p(0, k) = p.qx;
    tr.p(1, k) = p.qy;
    tr.reference.col(k) = reference.pos.col(k);
    tr.y_rb.col(k) = y_rb;
    tr.e.col(k) = e;
    tr.e_axis.col(k) = stack.axis_from_modal * e;
    tr.u_rb.col(k) = u_fb;
    tr.u_ff.col(k) = u_ff;
    tr.u_fm.col(k) = u_fm;
    tr.u_tilde.col(k) = u;
    tr.x.col(k) = x;
    tr.q_hat.col(k) = q_hat;

    x_next.noalias() = zoh.a * x;
    x_next.noalias() += bdu * u;
    x_next.noalias() += zoh.b * w;
    x.swap(x_next);
    if (!x.allFinite() || !q_hat.allFinite()) {
      std::ostringstream os;
      os << "state became non-finite at tick " << k << " (t = " << tr.t(k) << " s)";
      throw Error(ErrorCode::NonFiniteState, os.str());
    }
    const VectorXd axis = stack.axis_from_modal * y_rb;
    measured = {axis(0), axis(1)};
  }
  return tr;
}

AbTraces ab_compare(const PlantStack& stack, const ControllerDesign& design, const ReferenceTrace& reference,
                    SimConfig cfg) {
  AbTraces out;
  cfg.flex = false;
  out.baseline = simulate(stack, design, reference, cfg);
  cfg.flex = true;
  out.extended = simulate(stack, design, reference, cfg);
  return out;
}

}  // namespace flexctl
