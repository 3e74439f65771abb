#include "flexctl/loop_model.hpp"

#include "flexctl/discretize.hpp"
#include "flexctl/error.hpp"

namespace flexctl {

SectionModel cascade_model(const std::vector<Biquad>& sections) {
  SectionModel m;
  m.a = MatrixXd::Zero(0, 0);
  m.b = VectorXd::Zero(0);
  m.c = RowVectorXd::Zero(0);
  m.d = 1.0;
  for (const Biquad& q : sections) {
    MatrixXd a2(2, 2);
    a2 << -q.a1, 1.0, -q.a2, 0.0;
    VectorXd b2(2);
    b2 << q.b1 - q.a1 * q.b0, q.b2 - q.a2 * q.b0;
    RowVectorXd c2(2);
    c2 << 1.0, 0.0;
    const Index n = m.a.rows();
    SectionModel s;
    s.a = MatrixXd::Zero(n + 2, n + 2);
    s.a.topLeftCorner(n, n) = m.a;
    s.a.bottomLeftCorner(2, n) = b2 * m.c;
    s.a.bottomRightCorner(2, 2) = a2;
    s.b.resize(n + 2);
    s.b << m.b, b2 * m.d;
    s.c.resize(n + 2);
    s.c << q.b0 * m.c, c2;
    s.d = q.b0 * m.d;
    m = std::move(s);
  }
  return m;
}

LoopModel frozen_loop(const PlantStack& stack, const ControllerDesign& design, const SchedulingPoint& p, bool flex,
                      bool rb_closed) {
  const DecoupledPlant& plant = stack.plant;
  const Index n_rb = stack.n_rb();
  const Index nx = plant.states();
  const ZohModel zoh = zoh_discretize(plant.a(), plant.raw.b(), design.ts);
  const MatrixXd bdu = zoh.b * plant.t_u;
  const MatrixXd cy = plant.c_at(p);

  const Index nobs = flex ? static_cast<Index>(design.bank.size()) : 0;
  const Index no = design.bank.model.states();
  const Index n_ctl = design.gains.modes();
  std::vector<SectionModel> filters;
  if (flex) {
    for (const BandPassDesign& bp : design.bandpass) filters.push_back(cascade_model({bp.section, bp.section}));
  }
  std::vector<SectionModel> pids;
  if (rb_closed) {
    if (static_cast<Index>(design.pid.size()) != n_rb) throw Error(ErrorCode::DimensionMismatch, "PID axis count");
    for (const PidAxisDesign& d : design.pid) pids.push_back(cascade_model({d.lead_integrator, d.lowpass}));
  }

  const Index oo = nx;
  const Index of = oo + nobs * no;
  Index nf = 0;
  for (const auto& f : filters) nf += 2 * f.a.rows();
  const Index oc = of + nf;
  Index np = 0;
  for (const auto& c : pids) np += c.a.rows();
  const Index n = oc + np;

  MatrixXd y = MatrixXd::Zero(n_rb, n);
  y.leftCols(nx) = cy;
  MatrixXd uz = MatrixXd::Zero(n_rb, n);
  MatrixXd uv = MatrixXd::Zero(n_rb, n_rb);
  MatrixXd a = MatrixXd::Zero(n, n);
  MatrixXd b = MatrixXd::Zero(n, n_rb);

  if (flex) {
    if (static_cast<Index>(filters.size()) != n_ctl) throw Error(ErrorCode::DimensionMismatch, "band-pass count");
    const RowVectorXd w = design.weights.weights(p);
    const std::vector<Index> offsets = design.controlled_offsets(stack);
    Index fb = of;
    for (Index j = 0; j < n_ctl; ++j) {
      const SectionModel& f = filters[static_cast<std::size_t>(j)];
      const Index fs = f.a.rows();
      for (Index kind = 0; kind < 2; ++kind) {
        RowVectorXd s = RowVectorXd::Zero(n);
        for (Index i = 0; i < nobs; ++i) s(oo + i * no + offsets[static_cast<std::size_t>(j)] + kind) = w(i);
        RowVectorXd g = f.d * s;
        g.segment(fb, fs) += f.c;
        const VectorXd col = kind == 0 ? design.gains.ks.col(j) : design.gains.kd.col(j);
        uz += col * g;
        a.block(fb, fb, fs, fs) += f.a;
        a.middleRows(fb, fs) += f.b * s;
        fb += fs;
      }
    }
  }

  if (rb_closed) {
    Index cb = oc;
    for (Index i = 0; i < n_rb; ++i) {
      const SectionModel& c = pids[static_cast<std::size_t>(i)];
      const Index cs = c.a.rows();
      uz.row(i).segment(cb, cs) += c.c;
      uz.row(i) -= c.d * y.row(i);
      uv(i, i) += c.d;
      a.block(cb, cb, cs, cs) += c.a;
      a.middleRows(cb, cs) -= c.b * y.row(i);
      b.block(cb, i, cs, 1) += c.b;
      cb += cs;
    }
  } else {
    uv.setIdentity();
  }

  a.topLeftCorner(nx, nx) += zoh.a;
  a.topRows(nx) += bdu * uz;
  b.topRows(nx) += bdu * uv;
  for (Index i = 0; i < nobs; ++i) {
    const LocalObserver& obs = design.bank.observers[static_cast<std::size_t>(i)];
    const Index r = oo + i * no;
    a.block(r, r, no, no) += obs.a_cl();
    a.middleRows(r, no) += obs.b_u() * uz + obs.gain() * y;
    b.middleRows(r, no) += obs.b_u() * uv;
  }

  LoopModel m;
  m.a = std::move(a);
  m.b = std::move(b);
  m.c = std::move(y);
  m.plant_states = nx;
  m.observer_states = nobs * no;
  return m;
}

}  // namespace flexctl
