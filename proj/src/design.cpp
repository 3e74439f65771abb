#include "flexctl/design.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "flexctl/error.hpp"
#include "flexctl/simulation.hpp"

namespace flexctl {

PlantStack build_plant(const Config& cfg) {
  cfg.validate();
  const MechModel& model = cfg.plant.model;
  const ModelTolerances& tol = cfg.plant.tolerances;
  model.validate(tol);
  PlantStack s;
  s.ts = cfg.observer.ts;
  s.modal = to_modal(model, tol);
  s.plant = decouple(group_and_partition(s.modal), tol);
  for (Index m : cfg.observer.retained_modes) {
    if (m >= s.plant.n_fm()) {
      throw Error(ErrorCode::Config, "observer.retained_modes: mode " + std::to_string(m) + " does not exist (" +
                                         std::to_string(s.plant.n_fm()) + " flexible modes)");
    }
  }
  s.truncated = truncate(s.plant, cfg.observer.retained_modes);
  s.observer_model = discretize_observer_model(s.truncated, s.ts);
  s.axis_from_modal = s.plant.raw.rigid_shapes;
  const Pseudoinverse inv = pseudoinverse(s.axis_from_modal);
  if (inv.rank < s.n_rb() || inv.condition > tol.max_condition) {
    throw Error(ErrorCode::RankDeficient, "rigid-body mode shapes do not span the leading axes");
  }
  s.modal_from_axis = inv.value;
  return s;
}

std::uint64_t design_config_hash(const Config& cfg) {
  Config c = cfg;
  const Config d;
  c.sim = d.sim;
  c.noise.seed = d.noise.seed;
  c.analysis = d.analysis;
  return config_hash(c);
}

std::vector<Index> ControllerDesign::controlled_offsets(const PlantStack& stack) const {
  std::vector<Index> out;
  const auto& keep = stack.truncated.keep;
  for (Index m : gains.controlled) {
    const auto it = std::find(keep.begin(), keep.end(), m);
    if (it == keep.end()) throw Error(ErrorCode::InvalidArgument, "controlled mode is not retained by the observer");
    out.push_back(stack.truncated.flex_offset(static_cast<Index>(it - keep.begin())));
  }
  return out;
}

ControllerDesign design_controllers(const Config& cfg, const PlantStack& stack) {
  ControllerDesign d;
  d.config_hash = design_config_hash(cfg);
  d.ts = stack.ts;

  const NoiseDesign noise =
      NoiseDesign::defaults(stack.observer_model, cfg.observer.q_scale, cfg.observer.q_floor, cfg.observer.r_scale);
  const std::vector<SchedulingPoint> grid = stack.plant.workspace().grid(cfg.grid.nx, cfg.grid.ny);
  d.bank = synthesize_bank(stack.truncated, grid, noise, stack.observer_model);

  const SpatialBasis basis{cfg.weighting.mx, cfg.weighting.my};
  d.weights = solve_lse(constraint_system(basis, grid));

  const auto& fc = cfg.flex_control;
  const Index n_ctl = static_cast<Index>(fc.controlled_modes.size());
  ModalTargets targets;
  targets.zeta_star = Eigen::Map<const VectorXd>(fc.zeta_star.data(), n_ctl);
  targets.omega_star.resize(n_ctl);
  for (Index j = 0; j < n_ctl; ++j) {
    const Index m = fc.controlled_modes[static_cast<std::size_t>(j)];
    targets.omega_star(j) = fc.omega_star_hz.empty() ? stack.plant.raw.omega(stack.n_rb() + m)
                                                     : 2.0 * std::numbers::pi * fc.omega_star_hz[static_cast<std::size_t>(j)];
  }
  d.gains = design_gains(stack.plant, fc.controlled_modes, targets, cfg.plant.tolerances.max_condition);
  for (Index j = 0; j < n_ctl; ++j) d.bandpass.push_back(make_bandpass(targets.omega_star(j), fc.q, d.ts));

  const auto& rb = cfg.rb_control;
  if (static_cast<Index>(rb.f_bw.size()) != stack.n_rb()) {
    throw Error(ErrorCode::Config, "rb_control.f_bw: one bandwidth per rigid-body mode (" +
                                       std::to_string(stack.n_rb()) + ") is required");
  }
  const double f_res = d.gains.omega.minCoeff() / (2.0 * std::numbers::pi);
  for (double f : rb.f_bw) {
    PidAxisDesign pid = design_pid(f, d.ts, 1.0, f_res);
    if (!pid.warning.empty()) {
      if (!rb.allow_high_bandwidth) {
        throw Error(ErrorCode::Config, "rb_control.f_bw: " + pid.warning + " (set allow_high_bandwidth)");
      }
      d.warnings.push_back(pid.warning);
    }
    d.pid.push_back(pid);
  }
  d.feedforward = FeedforwardDesign::mass_only(stack.n_rb(), 1.0);
  d.feedforward.snap_gain = Eigen::Map<const VectorXd>(rb.snap_feedforward.data(), stack.n_rb());
  d.feedforward.enabled = rb.feedforward;
  return d;
}

TrainingTrace generate_training(const Config& cfg, const PlantStack& stack, const ControllerDesign& design) {
  const Workspace& ws = stack.plant.workspace();
  const double ts = stack.ts;
  // Serpentine rows at every grid row and between rows.
  const int rows = std::max(1, 2 * cfg.grid.ny - 1);
  std::vector<ScanLine> lines;
  for (int r = 0; r < rows; ++r) {
    const double y = rows == 1 ? ws.center().qy : ws.y_lo + (ws.y_hi - ws.y_lo) * r / (rows - 1);
    const bool forward = r % 2 == 0;
    lines.push_back({forward ? ws.x_lo : ws.x_hi, forward ? ws.x_hi : ws.x_lo, y});
  }
  MotionLimits lx = cfg.trajectory.x;
  lx.v = std::min(lx.v, cfg.weighting.training_speed);
  MotionLimits ly = cfg.trajectory.y;
  ScanOptions opts;
  opts.guard = 0.0;
  opts.dwell = cfg.trajectory.dwell;
  opts.axes = stack.n_rb();
  ReferenceTrace ref = scan_sequence(lines, lx, ly, ts, opts);

  const Index n = std::min<Index>(ref.samples(), static_cast<Index>(std::llround(cfg.weighting.training_duration / ts)));
  if (n < 2) throw Error(ErrorCode::TooShort, "training run shorter than two samples");
  for (MatrixXd* m : {&ref.pos, &ref.vel, &ref.acc, &ref.jerk, &ref.snap}) {
    const MatrixXd head = m->leftCols(n);
    *m = head;
  }
  ref.cv_windows.clear();
  ref.exposure_windows.clear();

  SimConfig sc = SimConfig::from(cfg, false);
  sc.seed = kTrainingSeed;
  const SimTrace tr = simulate(stack, design, ref, sc);
  TrainingTrace out;
  out.ts = ts;
  out.p = tr.p;
  out.u = tr.u_tilde;
  out.y = tr.y_rb;
  out.x = tr.x;
  return out;
}

WeightingScheme fit_weights(const PlantStack& stack, const ObserverBank& bank, const SpatialBasis& basis,
                            const TrainingTrace& trace, bool strict) {
  const Index n = trace.samples();
  if (n < 2) throw Error(ErrorCode::TooShort, "training trace needs at least two samples");
  if (std::abs(trace.ts - bank.model.ts) > 1e-12 * bank.model.ts) {
    throw Error(ErrorCode::TsMismatch, "training trace sampled at a different Ts than the observers");
  }
  const Index n_rb = stack.n_rb();
  if (trace.u.rows() != n_rb || trace.y.rows() != n_rb || trace.x.rows() != stack.plant.states() ||
      trace.u.cols() != n || trace.y.cols() != n || trace.x.cols() != n || trace.p.rows() != 2) {
    throw Error(ErrorCode::DimensionMismatch, "training trace shape does not match the plant");
  }
  const TruncatedPlant& tp = stack.truncated;
  const Index nq = 2 * tp.retained();

  // Observer state offset -> full-model state row for every retained flexible state.
  std::vector<Index> full_rows;
  for (Index j = 0; j < tp.retained(); ++j) {
    const Index m = tp.keep[static_cast<std::size_t>(j)];
    full_rows.push_back(2 * n_rb + 2 * m);
    full_rows.push_back(2 * n_rb + 2 * m + 1);
  }
  const Index q0 = tp.flex_offset(0);

  std::vector<SchedulingPoint> schedule;
  MatrixXd reference(nq, n - 1);
  for (Index k = 0; k + 1 < n; ++k) {
    schedule.push_back({trace.p(0, k), trace.p(1, k)});
    for (Index r = 0; r < nq; ++r) reference(r, k) = trace.x(full_rows[static_cast<std::size_t>(r)], k + 1);
  }
  std::vector<MatrixXd> local;
  for (const LocalObserver& proto : bank.observers) {
    LocalObserver obs = proto;
    obs.reset();
    MatrixXd pred(nq, n - 1);
    for (Index k = 0; k + 1 < n; ++k) {
      const VectorXd& q = obs.step(trace.u.col(k), trace.y.col(k));
      pred.col(k) = q.segment(q0, nq);
    }
    local.push_back(std::move(pred));
  }
  const WeightingScheme w = solve_lse(assemble_regression(basis, bank.points(), schedule, local, reference));
  if (strict && w.report.infeasible_constraints) {
    std::ostringstream os;
    os << "weight constraints cannot be met: ||XF - J|| = " << w.report.constraint_residual;
    throw Error(ErrorCode::InfeasibleConstraints, os.str());
  }
  return w;
}

ControllerDesign run_design(const Config& cfg, const PlantStack& stack) {
  ControllerDesign d = design_controllers(cfg, stack);
  const TrainingTrace tr = generate_training(cfg, stack, d);
  d.weights = fit_weights(stack, d.bank, d.weights.basis, tr, cfg.weighting.strict_constraints);
  if (d.weights.report.infeasible_constraints) {
    std::ostringstream os;
    os << "InfeasibleConstraints: " << d.bank.size() << " observers with a (" << d.weights.basis.mx << ", "
       << d.weights.basis.my << ") basis cannot meet W_i(p_j) = delta_ij; least-squares residual "
       << d.weights.report.constraint_residual;
    d.warnings.push_back(os.str());
  }
  return d;
}

}  // namespace flexctl
