#include "flexctl/design_file.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "flexctl/error.hpp"

namespace flexctl {

namespace {

constexpr const char* kMagic = "flexctl-design";
constexpr int kVersion = 1;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Writer {
 public:
  void text(const std::string& name, const std::string& value) { os_ << name << ',' << value << '\n'; }
  void matrix(const std::string& name, const MatrixXd& m) {
    os_ << name << ',' << m.rows() << ',' << m.cols();
    for (double v : vectorize(m)) os_ << ',' << fmt(v);
    os_ << '\n';
  }
  void scalar(const std::string& name, double v) { matrix(name, MatrixXd::Constant(1, 1, v)); }
  void biquad(const std::string& name, const Biquad& b) {
    MatrixXd m(1, 5);
    m << b.b0, b.b1, b.b2, b.a1, b.a2;
    matrix(name, m);
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

class Reader {
 public:
  explicit Reader(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int no = 0;
    while (std::getline(is, line)) {
      ++no;
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw Error(ErrorCode::Io, "design file line " + std::to_string(no) + " malformed");
      const std::string name = line.substr(0, comma);
      if (!records_.emplace(name, line.substr(comma + 1)).second) {
        throw Error(ErrorCode::Io, "design file record " + name + " repeated");
      }
    }
  }

  bool has(const std::string& name) const { return records_.count(name) > 0; }

  const std::string& text(const std::string& name) const {
    const auto it = records_.find(name);
    if (it == records_.end()) throw Error(ErrorCode::Io, "design file lacks record " + name);
    return it->second;
  }

  MatrixXd matrix(const std::string& name) const {
    const std::string& body = text(name);
    std::vector<double> vals;
    const char* p = body.c_str();
    while (*p) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(p, &end);
      if (end == p || errno == ERANGE) throw Error(ErrorCode::Io, "design file record " + name + " has a bad number");
      vals.push_back(v);
      p = end;
      if (*p == ',') ++p;
      else if (*p) throw Error(ErrorCode::Io, "design file record " + name + " has a bad separator");
    }
    if (vals.size() < 2) throw Error(ErrorCode::Io, "design file record " + name + " lacks its shape");
    const auto rows = static_cast<Index>(vals[0]);
    const auto cols = static_cast<Index>(vals[1]);
    if (rows < 0 || cols < 0 || static_cast<double>(rows) != vals[0] || static_cast<double>(cols) != vals[1] ||
        static_cast<std::size_t>(rows * cols) + 2 != vals.size()) {
      throw Error(ErrorCode::Io, "design file record " + name + " has an inconsistent shape");
    }
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) m(i, j) = vals[static_cast<std::size_t>(2 + j * rows + i)];
    }
    return m;
  }

  double scalar(const std::string& name) const {
    const MatrixXd m = matrix(name);
    if (m.size() != 1) throw Error(ErrorCode::Io, "design file record " + name + " is not a scalar");
    return m(0, 0);
  }

  Index integer(const std::string& name) const {
    const double v = scalar(name);
    if (v != std::floor(v) || v < 0) throw Error(ErrorCode::Io, "design file record " + name + " is not a count");
    return static_cast<Index>(v);
  }

  Biquad biquad(const std::string& name) const {
    const MatrixXd m = matrix(name);
    if (m.rows() != 1 || m.cols() != 5) throw Error(ErrorCode::Io, "design file record " + name + " is not a biquad");
    Biquad b;
    b.b0 = m(0, 0);
    b.b1 = m(0, 1);
    b.b2 = m(0, 2);
    b.a1 = m(0, 3);
    b.a2 = m(0, 4);
    return b;
  }

 private:
  std::map<std::string, std::string> records_;
};

std::string key(const std::string& group, std::size_t i, const std::string& field) {
  return group + "." + std::to_string(i) + "." + field;
}

MatrixXd index_row(const std::vector<Index>& v) {
  MatrixXd m(1, static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Index>(i)) = static_cast<double>(v[i]);
  return m;
}

std::vector<Index> index_list(const MatrixXd& m) {
  std::vector<Index> v;
  for (Index i = 0; i < m.size(); ++i) v.push_back(static_cast<Index>(m(i)));
  return v;
}

}  // namespace

std::string write_design(const ControllerDesign& d) {
  Writer w;
  w.text(kMagic, std::to_string(kVersion));
  w.text("config_hash", hash_hex(d.config_hash));
  w.scalar("ts", d.ts);

  const DiscreteModel& m = d.bank.model;
  w.matrix("model.a", m.a);
  w.matrix("model.b", m.b);
  w.scalar("model.ts", m.ts);
  w.scalar("model.n_rb", static_cast<double>(m.n_rb));
  w.scalar("model.retained", static_cast<double>(m.retained));
  w.scalar("observers", static_cast<double>(d.bank.size()));
  for (std::size_t i = 0; i < d.bank.size(); ++i) {
    const LocalObserver& o = d.bank.observers[i];
    MatrixXd p(1, 2);
    p << o.point().qx, o.point().qy;
    w.matrix(key("observer", i, "p"), p);
    w.matrix(key("observer", i, "c"), o.c());
    w.matrix(key("observer", i, "d"), o.d());
    w.matrix(key("observer", i, "l"), o.gain());
    w.scalar(key("observer", i, "dare_residual"), o.dare_residual);
    w.scalar(key("observer", i, "p_norm"), o.p_norm);
  }

  const WeightingScheme& ws = d.weights;
  MatrixXd deg(1, 2);
  deg << ws.basis.mx, ws.basis.my;
  w.matrix("weights.degree", deg);
  MatrixXd grid(2, static_cast<Index>(ws.grid.size()));
  for (std::size_t j = 0; j < ws.grid.size(); ++j) grid.col(static_cast<Index>(j)) << ws.grid[j].qx, ws.grid[j].qy;
  w.matrix("weights.grid", grid);
  w.matrix("weights.theta", ws.theta);
  w.matrix("weights.achieved", ws.achieved);
  const LseReport& r = ws.report;
  MatrixXd rep(1, 7);
  rep << r.constraint_residual, r.fit_residual, static_cast<double>(r.constraint_rank),
      static_cast<double>(r.free_dimensions), r.infeasible_constraints ? 1.0 : 0.0, r.regression_active ? 1.0 : 0.0,
      r.degenerate_regressor ? 1.0 : 0.0;
  w.matrix("weights.report", rep);

  const FlexGains& g = d.gains;
  w.matrix("gains.controlled", index_row(g.controlled));
  w.matrix("gains.ks", g.ks);
  w.matrix("gains.kd", g.kd);
  w.matrix("gains.omega", g.omega);
  w.matrix("gains.zeta", g.zeta);
  w.matrix("gains.zeta_star", g.targets.zeta_star);
  w.matrix("gains.omega_star", g.targets.omega_star);

  w.scalar("bandpass", static_cast<double>(d.bandpass.size()));
  for (std::size_t i = 0; i < d.bandpass.size(); ++i) {
    const BandPassDesign& b = d.bandpass[i];
    MatrixXd par(1, 3);
    par << b.omega, b.q, b.ts;
    w.matrix(key("bandpass", i, "params"), par);
    w.biquad(key("bandpass", i, "section"), b.section);
  }

  w.scalar("pid", static_cast<double>(d.pid.size()));
  for (std::size_t i = 0; i < d.pid.size(); ++i) {
    const PidAxisDesign& p = d.pid[i];
    MatrixXd par(1, 13);
    par << p.f_bw, p.mass, p.ts, p.k, p.wz, p.wp, p.wi, p.wlp, p.zeta_lp, p.kp, p.ki, p.kd, p.f_lp;
    w.matrix(key("pid", i, "params"), par);
    w.biquad(key("pid", i, "lead_integrator"), p.lead_integrator);
    w.biquad(key("pid", i, "lowpass"), p.lowpass);
    w.text(key("pid", i, "warning"), p.warning);
  }

  w.matrix("feedforward.mass", d.feedforward.mass);
  w.matrix("feedforward.snap_gain", d.feedforward.snap_gain);
  w.scalar("feedforward.enabled", d.feedforward.enabled ? 1.0 : 0.0);

  w.scalar("warnings", static_cast<double>(d.warnings.size()));
  for (std::size_t i = 0; i < d.warnings.size(); ++i) w.text("warning." + std::to_string(i), d.warnings[i]);
  return w.str();
}

ControllerDesign read_design(const std::string& text) {
  const Reader r(text);
  if (!r.has(kMagic) || r.text(kMagic) != std::to_string(kVersion)) {
    throw Error(ErrorCode::Io, "not a version " + std::to_string(kVersion) + " design file");
  }
  ControllerDesign d;
  const std::string& h = r.text("config_hash");
  char* end = nullptr;
  d.config_hash = std::strtoull(h.c_str(), &end, 16);
  if (h.size() != 16 || *end != '\0') throw Error(ErrorCode::Io, "design file has a malformed config hash");
  d.ts = r.scalar("ts");

  DiscreteModel& m = d.bank.model;
  m.a = r.matrix("model.a");
  m.b = r.matrix("model.b");
  m.ts = r.scalar("model.ts");
  m.n_rb = r.integer("model.n_rb");
  m.retained = r.integer("model.retained");
  const Index nobs = r.integer("observers");
  for (Index i = 0; i < nobs; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const MatrixXd p = r.matrix(key("observer", k, "p"));
    if (p.size() != 2) throw Error(ErrorCode::Io, "observer point must have two coordinates");
    LocalObserver o({p(0), p(1)}, m, r.matrix(key("observer", k, "c")), r.matrix(key("observer", k, "d")),
                    r.matrix(key("observer", k, "l")));
    o.dare_residual = r.scalar(key("observer", k, "dare_residual"));
    o.p_norm = r.scalar(key("observer", k, "p_norm"));
    d.bank.observers.push_back(std::move(o));
  }

  WeightingScheme& ws = d.weights;
  const MatrixXd deg = r.matrix("weights.degree");
  if (deg.size() != 2) throw Error(ErrorCode::Io, "weights.degree must hold two entries");
  ws.basis = {static_cast<int>(deg(0)), static_cast<int>(deg(1))};
  const MatrixXd grid = r.matrix("weights.grid");
  for (Index j = 0; j < grid.cols(); ++j) ws.grid.push_back({grid(0, j), grid(1, j)});
  ws.theta = r.matrix("weights.theta");
  ws.achieved = r.matrix("weights.achieved");
  const MatrixXd rep = r.matrix("weights.report");
  if (rep.size() != 7) throw Error(ErrorCode::Io, "weights.report must hold seven entries");
  ws.report.constraint_residual = rep(0);
  ws.report.fit_residual = rep(1);
  ws.report.constraint_rank = static_cast<Index>(rep(2));
  ws.report.free_dimensions = static_cast<Index>(rep(3));
  ws.report.infeasible_constraints = rep(4) != 0.0;
  ws.report.regression_active = rep(5) != 0.0;
  ws.report.degenerate_regressor = rep(6) != 0.0;
  if (ws.theta.rows() != ws.basis.size() || ws.theta.cols() != nobs || static_cast<Index>(ws.grid.size()) != nobs) {
    throw Error(ErrorCode::Io, "weighting scheme does not match the observer bank");
  }

  FlexGains& g = d.gains;
  g.controlled = index_list(r.matrix("gains.controlled"));
  g.ks = r.matrix("gains.ks");
  g.kd = r.matrix("gains.kd");
  g.omega = r.matrix("gains.omega");
  g.zeta = r.matrix("gains.zeta");
  g.targets.zeta_star = r.matrix("gains.zeta_star");
  g.targets.omega_star = r.matrix("gains.omega_star");

  const Index nbp = r.integer("bandpass");
  for (Index i = 0; i < nbp; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const MatrixXd par = r.matrix(key("bandpass", k, "params"));
    if (par.size() != 3) throw Error(ErrorCode::Io, "band-pass parameters must hold three entries");
    BandPassDesign b;
    b.omega = par(0);
    b.q = par(1);
    b.ts = par(2);
    b.section = r.biquad(key("bandpass", k, "section"));
    d.bandpass.push_back(b);
  }

  const Index npid = r.integer("pid");
  for (Index i = 0; i < npid; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const MatrixXd par = r.matrix(key("pid", k, "params"));
    if (par.size() != 13) throw Error(ErrorCode::Io, "PID parameters must hold thirteen entries");
    PidAxisDesign p;
    p.f_bw = par(0);
    p.mass = par(1);
    p.ts = par(2);
    p.k = par(3);
    p.wz = par(4);
    p.wp = par(5);
    p.wi = par(6);
    p.wlp = par(7);
    p.zeta_lp = par(8);
    p.kp = par(9);
    p.ki = par(10);
    p.kd = par(11);
    p.f_lp = par(12);
    p.lead_integrator = r.biquad(key("pid", k, "lead_integrator"));
    p.lowpass = r.biquad(key("pid", k, "lowpass"));
    p.warning = r.text(key("pid", k, "warning"));
    d.pid.push_back(p);
  }

  d.feedforward.mass = r.matrix("feedforward.mass");
  d.feedforward.snap_gain = r.matrix("feedforward.snap_gain");
  d.feedforward.enabled = r.scalar("feedforward.enabled") != 0.0;

  const Index nw = r.integer("warnings");
  for (Index i = 0; i < nw; ++i) d.warnings.push_back(r.text("warning." + std::to_string(i)));
  return d;
}

void save_design(const ControllerDesign& design, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write design file " + path);
  out << write_design(design);
  if (!out) throw Error(ErrorCode::Io, "failed writing design file " + path);
}

ControllerDesign load_design(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open design file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return read_design(ss.str());
}

}  // namespace flexctl
