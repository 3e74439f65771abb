#include "flexctl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "flexctl/error.hpp"
#include "flexctl/synth_stage.hpp"

extern char** environ;

namespace flexctl {

namespace {

struct KeyDoc {
  const char* section;
  const char* key;
  const char* doc;
};

// Single source of truth for the strict schema and the reference page.
const std::vector<KeyDoc>& schema() {
  static const std::vector<KeyDoc> docs = {
      {"plant", "M", "Mass matrix (kg, kg m^2), symmetric positive definite, n_x x n_x."},
      {"plant", "D", "Damping matrix (N s/m), symmetric positive semidefinite; must be proportional."},
      {"plant", "K", "Stiffness matrix (N/m), symmetric positive semidefinite."},
      {"plant", "Phi_a", "Actuator influence map, n_x x n_u."},
      {"plant", "Phi_s", "Sensor map polynomial table [plant.Phi_s]: rows, cols, degree = [dx, dy] and one "
                         "matrix cVW per monomial qx^V qy^W (missing terms are zero)."},
      {"plant", "symmetry_tol", "Relative asymmetry tolerance for M, D, K."},
      {"plant", "rigid_omega_tol", "Eigenfrequencies below this (rad/s) are rigid-body modes."},
      {"plant", "damping_offdiag_tol", "Allowed off-diagonal/diagonal Frobenius ratio of the modal damping."},
      {"plant", "max_condition", "Largest condition number accepted for the decoupling pseudoinverses."},
      {"workspace", "x_lo", "Workspace lower x bound (m)."},
      {"workspace", "x_hi", "Workspace upper x bound (m)."},
      {"workspace", "y_lo", "Workspace lower y bound (m)."},
      {"workspace", "y_hi", "Workspace upper y bound (m)."},
      {"grid", "nx", "Local observer grid points along x (edges included)."},
      {"grid", "ny", "Local observer grid points along y (edges included)."},
      {"observer", "ts", "Sampling time (s)."},
      {"observer", "retained_modes", "Flexible modes kept in the observer model (0 = lowest flexible mode)."},
      {"observer", "q_scale", "Process noise Qw = q_scale (B B' + q_floor I)."},
      {"observer", "q_floor", "Identity floor inside Qw."},
      {"observer", "r_scale", "Measurement noise Rv = r_scale I (m^2)."},
      {"weighting", "mx", "Polynomial weight degree in q_x."},
      {"weighting", "my", "Polynomial weight degree in q_y."},
      {"weighting", "training_duration", "Length of the raster training run (s)."},
      {"weighting", "training_speed", "Raster scan speed of the training run (m/s)."},
      {"weighting", "strict_constraints", "Treat infeasible weight constraints as a hard failure."},
      {"flex_control", "controlled_modes", "Flexible modes under active control; must be retained."},
      {"flex_control", "zeta_star", "Target damping ratio per controlled mode."},
      {"flex_control", "omega_star_hz", "Target frequency per controlled mode (Hz); empty keeps the open-loop value."},
      {"flex_control", "q", "Band-pass quality factor."},
      {"rb_control", "f_bw", "PID bandwidth per rigid-body axis (Hz)."},
      {"rb_control", "allow_high_bandwidth", "Warn instead of failing when f_bw exceeds 1/10 of the first "
                                             "controlled resonance."},
      {"rb_control", "feedforward", "Enable mass feedforward."},
      {"rb_control", "snap_feedforward", "Snap feedforward gain per axis."},
      {"trajectory", "x_v", "x velocity limit (m/s)."},
      {"trajectory", "x_a", "x acceleration limit (m/s^2)."},
      {"trajectory", "x_j", "x jerk limit (m/s^3)."},
      {"trajectory", "x_s", "x snap limit (m/s^4)."},
      {"trajectory", "y_v", "y velocity limit (m/s)."},
      {"trajectory", "y_a", "y acceleration limit (m/s^2)."},
      {"trajectory", "y_j", "y jerk limit (m/s^3)."},
      {"trajectory", "y_s", "y snap limit (m/s^4)."},
      {"trajectory", "guard", "Exposure window shrink per side of the constant-velocity window (s)."},
      {"trajectory", "dwell", "Hold time before each move and after each scan line (s)."},
      {"trajectory", "lines", "Scan lines as [x_start, x_end, y] triples (m)."},
      {"sim", "scheduling_source", "Scheduling coordinate: \"reference\" or \"measured\"."},
      {"sim", "check_stability", "Verify frozen closed-loop stability at the grid points before running."},
      {"noise", "sensor_std", "Sensor noise standard deviation per channel (m or rad)."},
      {"noise", "force_std", "Actuator force disturbance standard deviation (N)."},
      {"noise", "seed", "Random seed (non-negative 63-bit integer)."},
      {"analysis", "window", "MA/MSD window length T (s)."},
      {"analysis", "f_min", "FRF grid start (Hz)."},
      {"analysis", "f_max", "FRF grid end (Hz)."},
      {"analysis", "points", "FRF log-grid points."},
      {"analysis", "band_halfwidth", "Peak-search band half-width relative to the mode frequency."},
      {"analysis", "band_points", "Linear grid points in the peak-search band."},
      {"analysis", "psd_segment", "Welch segment length (samples)."},
  };
  return docs;
}

const std::vector<std::string>& section_names() {
  static const std::vector<std::string> names = {"plant",        "workspace",  "grid",       "observer",
                                                 "weighting",    "flex_control", "rb_control", "trajectory",
                                                 "sim",          "noise",      "analysis"};
  return names;
}

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::Config, key + ": " + what);
}

double as_double(const toml::node& n, const std::string& key) {
  if (auto v = n.value<double>()) {
    if (n.is_integer() || n.is_floating_point()) return *v;
  }
  fail(key, "expected a number");
}

std::int64_t as_int(const toml::node& n, const std::string& key) {
  if (!n.is_integer()) fail(key, "expected an integer");
  return *n.value<std::int64_t>();
}

bool as_bool(const toml::node& n, const std::string& key) {
  if (!n.is_boolean()) fail(key, "expected true or false");
  return *n.value<bool>();
}

std::string as_string(const toml::node& n, const std::string& key) {
  if (!n.is_string()) fail(key, "expected a string");
  return *n.value<std::string>();
}

std::vector<double> as_doubles(const toml::node& n, const std::string& key) {
  const toml::array* a = n.as_array();
  if (!a) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < a->size(); ++i) out.push_back(as_double(*a->get(i), key + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<Index> as_indices(const toml::node& n, const std::string& key) {
  const toml::array* a = n.as_array();
  if (!a) fail(key, "expected an array of integers");
  std::vector<Index> out;
  for (std::size_t i = 0; i < a->size(); ++i) {
    const std::int64_t v = as_int(*a->get(i), key + "[" + std::to_string(i) + "]");
    if (v < 0) fail(key, "indices must be non-negative");
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

MatrixXd as_matrix(const toml::node& n, const std::string& key) {
  const toml::array* rows = n.as_array();
  if (!rows || rows->empty()) fail(key, "expected a non-empty matrix literal [[..], ..]");
  Index cols = -1;
  std::vector<std::vector<double>> data;
  for (std::size_t i = 0; i < rows->size(); ++i) {
    const std::string rk = key + "[" + std::to_string(i) + "]";
    std::vector<double> r = as_doubles(*rows->get(i), rk);
    if (cols < 0) cols = static_cast<Index>(r.size());
    if (static_cast<Index>(r.size()) != cols || cols == 0) fail(key, "matrix rows must be non-empty and equally long");
    data.push_back(std::move(r));
  }
  MatrixXd m(static_cast<Index>(data.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = data[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

void check_keys(const toml::table& t, const std::string& section, const std::set<std::string>& extra = {}) {
  for (const auto& [k, v] : t) {
    const std::string key(k.str());
    const bool known = std::any_of(schema().begin(), schema().end(), [&](const KeyDoc& d) {
      return section == d.section && key == d.key;
    });
    if (!known && !extra.count(key)) fail(section + "." + key, "unknown key");
  }
}

const toml::table& as_table(const toml::node& n, const std::string& key) {
  const toml::table* t = n.as_table();
  if (!t) fail(key, "expected a table");
  return *t;
}

PositionPolynomial parse_phi_s(const toml::table& t, const PositionPolynomial& current) {
  const std::string base = "plant.Phi_s";
  Index rows = current.rows();
  Index cols = current.cols();
  int dx = current.degree_x();
  int dy = current.degree_y();
  bool reshape = false;
  std::vector<std::pair<std::string, const toml::node*>> terms;
  for (const auto& [k, v] : t) {
    const std::string key(k.str());
    if (key == "rows") {
      rows = as_int(v, base + ".rows");
      reshape = true;
    } else if (key == "cols") {
      cols = as_int(v, base + ".cols");
      reshape = true;
    } else if (key == "degree") {
      const std::vector<Index> d = as_indices(v, base + ".degree");
      if (d.size() != 2) fail(base + ".degree", "expected [dx, dy]");
      dx = static_cast<int>(d[0]);
      dy = static_cast<int>(d[1]);
      reshape = true;
    } else if (key.size() >= 3 && key[0] == 'c' &&
               std::all_of(key.begin() + 1, key.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      terms.emplace_back(key, &v);
    } else {
      fail(base + "." + key, "unknown key");
    }
  }
  if (rows <= 0 || cols <= 0 || dx < 0 || dy < 0 || dx > 9 || dy > 9) fail(base, "invalid shape or degree");
  PositionPolynomial out = reshape ? PositionPolynomial(rows, cols, dx, dy) : current;
  for (const auto& [key, node] : terms) {
    if (key.size() != 3) fail(base + "." + key, "coefficient keys are cVW with single-digit exponents");
    const int v = key[1] - '0';
    const int w = key[2] - '0';
    if (v > dx || w > dy) fail(base + "." + key, "exponent exceeds the declared degree");
    const MatrixXd m = as_matrix(*node, base + "." + key);
    if (m.rows() != rows || m.cols() != cols) fail(base + "." + key, "coefficient shape differs from rows x cols");
    out.coefficient(v, w) = m;
  }
  return out;
}

ScanLine as_line(const toml::node& n, const std::string& key) {
  const std::vector<double> v = as_doubles(n, key);
  if (v.size() != 3) fail(key, "scan lines are [x_start, x_end, y]");
  return {v[0], v[1], v[2]};
}

void apply_table(Config& c, const toml::table& root) {
  for (const auto& [k, v] : root) {
    const std::string sec(k.str());
    if (std::find(section_names().begin(), section_names().end(), sec) == section_names().end()) {
      fail(sec, "unknown section");
    }
    const toml::table& t = as_table(v, sec);
    check_keys(t, sec);
    auto key = [&](const char* name) { return sec + "." + name; };
    for (const auto& [kk, node] : t) {
      const std::string name(kk.str());
      const std::string full = sec + "." + name;
      if (sec == "plant") {
        MechModel& m = c.plant.model;
        if (name == "M") m.M = as_matrix(node, full);
        else if (name == "D") m.D = as_matrix(node, full);
        else if (name == "K") m.K = as_matrix(node, full);
        else if (name == "Phi_a") m.Phi_a = as_matrix(node, full);
        else if (name == "Phi_s") m.Phi_s = parse_phi_s(as_table(node, full), m.Phi_s);
        else if (name == "symmetry_tol") c.plant.tolerances.symmetry = as_double(node, full);
        else if (name == "rigid_omega_tol") c.plant.tolerances.rigid_omega = as_double(node, full);
        else if (name == "damping_offdiag_tol") c.plant.tolerances.damping_offdiag = as_double(node, full);
        else if (name == "max_condition") c.plant.tolerances.max_condition = as_double(node, full);
      } else if (sec == "workspace") {
        Workspace& w = c.plant.model.workspace;
        if (name == "x_lo") w.x_lo = as_double(node, full);
        else if (name == "x_hi") w.x_hi = as_double(node, full);
        else if (name == "y_lo") w.y_lo = as_double(node, full);
        else if (name == "y_hi") w.y_hi = as_double(node, full);
      } else if (sec == "grid") {
        if (name == "nx") c.grid.nx = static_cast<int>(as_int(node, full));
        else if (name == "ny") c.grid.ny = static_cast<int>(as_int(node, full));
      } else if (sec == "observer") {
        if (name == "ts") c.observer.ts = as_double(node, full);
        else if (name == "retained_modes") c.observer.retained_modes = as_indices(node, full);
        else if (name == "q_scale") c.observer.q_scale = as_double(node, full);
        else if (name == "q_floor") c.observer.q_floor = as_double(node, full);
        else if (name == "r_scale") c.observer.r_scale = as_double(node, full);
      } else if (sec == "weighting") {
        if (name == "mx") c.weighting.mx = static_cast<int>(as_int(node, full));
        else if (name == "my") c.weighting.my = static_cast<int>(as_int(node, full));
        else if (name == "training_duration") c.weighting.training_duration = as_double(node, full);
        else if (name == "training_speed") c.weighting.training_speed = as_double(node, full);
        else if (name == "strict_constraints") c.weighting.strict_constraints = as_bool(node, full);
      } else if (sec == "flex_control") {
        if (name == "controlled_modes") c.flex_control.controlled_modes = as_indices(node, full);
        else if (name == "zeta_star") c.flex_control.zeta_star = as_doubles(node, full);
        else if (name == "omega_star_hz") c.flex_control.omega_star_hz = as_doubles(node, full);
        else if (name == "q") c.flex_control.q = as_double(node, full);
      } else if (sec == "rb_control") {
        if (name == "f_bw") c.rb_control.f_bw = as_doubles(node, full);
        else if (name == "allow_high_bandwidth") c.rb_control.allow_high_bandwidth = as_bool(node, full);
        else if (name == "feedforward") c.rb_control.feedforward = as_bool(node, full);
        else if (name == "snap_feedforward") c.rb_control.snap_feedforward = as_doubles(node, full);
      } else if (sec == "trajectory") {
        TrajectorySection& tr = c.trajectory;
        if (name == "x_v") tr.x.v = as_double(node, full);
        else if (name == "x_a") tr.x.a = as_double(node, full);
        else if (name == "x_j") tr.x.j = as_double(node, full);
        else if (name == "x_s") tr.x.s = as_double(node, full);
        else if (name == "y_v") tr.y.v = as_double(node, full);
        else if (name == "y_a") tr.y.a = as_double(node, full);
        else if (name == "y_j") tr.y.j = as_double(node, full);
        else if (name == "y_s") tr.y.s = as_double(node, full);
        else if (name == "guard") tr.guard = as_double(node, full);
        else if (name == "dwell") tr.dwell = as_double(node, full);
        else if (name == "lines") {
          const toml::array* a = node.as_array();
          if (!a) fail(full, "expected an array of [x_start, x_end, y]");
          tr.lines.clear();
          for (std::size_t i = 0; i < a->size(); ++i) tr.lines.push_back(as_line(*a->get(i), full));
        }
      } else if (sec == "sim") {
        if (name == "scheduling_source") c.sim.scheduling_source = as_string(node, full);
        else if (name == "check_stability") c.sim.check_stability = as_bool(node, full);
      } else if (sec == "noise") {
        if (name == "sensor_std") c.noise.sensor_std = as_double(node, full);
        else if (name == "force_std") c.noise.force_std = as_double(node, full);
        else if (name == "seed") {
          const std::int64_t s = as_int(node, full);
          if (s < 0) fail(full, "seed must be non-negative");
          c.noise.seed = static_cast<std::uint64_t>(s);
        }
      } else if (sec == "analysis") {
        AnalysisSection& a = c.analysis;
        if (name == "window") a.window = as_double(node, full);
        else if (name == "f_min") a.f_min = as_double(node, full);
        else if (name == "f_max") a.f_max = as_double(node, full);
        else if (name == "points") a.points = static_cast<int>(as_int(node, full));
        else if (name == "band_halfwidth") a.band_halfwidth = as_double(node, full);
        else if (name == "band_points") a.band_points = static_cast<int>(as_int(node, full));
        else if (name == "psd_segment") a.psd_segment = static_cast<int>(as_int(node, full));
      }
      (void)key;
    }
  }
}

toml::table parse_toml(const std::string& text, const std::string& origin) {
  try {
    return toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw Error(ErrorCode::Config, os.str());
  }
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s + "]";
}

std::string list(const std::vector<Index>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

std::string matrix(const MatrixXd& m) {
  std::string s = "[";
  for (Index i = 0; i < m.rows(); ++i) {
    s += i ? ",\n  [" : "\n  [";
    for (Index j = 0; j < m.cols(); ++j) s += (j ? ", " : "") + num(m(i, j));
    s += "]";
  }
  return s + ",\n]";
}

std::string boolean(bool b) { return b ? "true" : "false"; }

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Config default_config() {
  Config c;
  c.plant.model = synth_stage();
  return c;
}

void Config::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(key, "must be positive");
  };
  positive(observer.ts, "observer.ts");
  if (grid.nx < 1 || grid.ny < 1) fail("grid", "nx and ny must be at least 1");
  if (observer.retained_modes.empty()) fail("observer.retained_modes", "at least one flexible mode is required");
  positive(observer.r_scale, "observer.r_scale");
  if (!(observer.q_scale >= 0.0) || !(observer.q_floor >= 0.0)) fail("observer.q_scale", "must be non-negative");
  if (weighting.mx < 0 || weighting.my < 0 || weighting.mx > 8 || weighting.my > 8) {
    fail("weighting.mx", "degrees must lie in 0..8");
  }
  positive(weighting.training_duration, "weighting.training_duration");
  positive(weighting.training_speed, "weighting.training_speed");
  if (flex_control.controlled_modes.empty()) fail("flex_control.controlled_modes", "must not be empty");
  for (Index m : flex_control.controlled_modes) {
    if (std::find(observer.retained_modes.begin(), observer.retained_modes.end(), m) ==
        observer.retained_modes.end()) {
      fail("flex_control.controlled_modes", "controlled modes must be retained by the observer");
    }
  }
  if (flex_control.zeta_star.size() != flex_control.controlled_modes.size()) {
    fail("flex_control.zeta_star", "one entry per controlled mode");
  }
  if (!flex_control.omega_star_hz.empty() &&
      flex_control.omega_star_hz.size() != flex_control.controlled_modes.size()) {
    fail("flex_control.omega_star_hz", "empty or one entry per controlled mode");
  }
  positive(flex_control.q, "flex_control.q");
  if (rb_control.snap_feedforward.size() != rb_control.f_bw.size()) {
    fail("rb_control.snap_feedforward", "one entry per f_bw axis");
  }
  trajectory.x.validate();
  trajectory.y.validate();
  if (trajectory.lines.empty()) fail("trajectory.lines", "at least one scan line is required");
  if (!(trajectory.guard >= 0.0) || !(trajectory.dwell >= 0.0)) fail("trajectory.guard", "must be non-negative");
  if (sim.scheduling_source != "reference" && sim.scheduling_source != "measured") {
    fail("sim.scheduling_source", "expected \"reference\" or \"measured\"");
  }
  if (!(noise.sensor_std >= 0.0) || !(noise.force_std >= 0.0)) fail("noise", "standard deviations must be >= 0");
  positive(analysis.window, "analysis.window");
  positive(analysis.f_min, "analysis.f_min");
  if (!(analysis.f_max > analysis.f_min)) fail("analysis.f_max", "must exceed f_min");
  if (analysis.f_max >= 0.5 / observer.ts) fail("analysis.f_max", "must lie below Nyquist");
  if (analysis.points < 2 || analysis.band_points < 3) fail("analysis.points", "too few frequency points");
  positive(analysis.band_halfwidth, "analysis.band_halfwidth");
  if (analysis.psd_segment < 8) fail("analysis.psd_segment", "must be at least 8");
  plant.model.workspace.validate();
}

Config parse_config(const std::string& text, const std::string& origin) {
  Config c = default_config();
  apply_table(c, parse_toml(text, origin));
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::map<std::string, std::string> collect_env_overrides() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv(*e);
    if (kv.rfind("FLEXCTL__", 0) != 0) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

void apply_env_overrides(Config& cfg, const std::map<std::string, std::string>& env) {
  auto lower = [](std::string s) {
    for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
  };
  for (const auto& [name, value] : env) {
    if (name.rfind("FLEXCTL__", 0) != 0) continue;
    std::vector<std::string> parts;
    std::string rest = name.substr(std::string("FLEXCTL__").size());
    for (std::size_t pos; (pos = rest.find("__")) != std::string::npos; rest = rest.substr(pos + 2)) {
      parts.push_back(rest.substr(0, pos));
    }
    parts.push_back(rest);
    if (parts.size() < 2 || parts.size() > 3) fail(name, "expected FLEXCTL__SECTION__KEY");
    const std::string sec = lower(parts[0]);
    std::string key;
    for (const KeyDoc& d : schema()) {
      if (sec == d.section && lower(parts[1]) == lower(d.key)) key = d.key;
    }
    if (key.empty()) fail(name, "does not name a configuration key");
    std::string snippet;
    if (parts.size() == 3) {
      if (key != "Phi_s") fail(name, "only plant.Phi_s has nested keys");
      snippet = "[" + sec + "." + key + "]\n" + lower(parts[2]) + " = " + value + "\n";
    } else {
      snippet = "[" + sec + "]\n" + key + " = " + value + "\n";
    }
    apply_table(cfg, parse_toml(snippet, name));
  }
}

std::string print_config(const Config& c) {
  std::ostringstream os;
  const MechModel& m = c.plant.model;
  os << "[plant]\n";
  os << "M = " << matrix(m.M) << "\n";
  os << "D = " << matrix(m.D) << "\n";
  os << "K = " << matrix(m.K) << "\n";
  os << "Phi_a = " << matrix(m.Phi_a) << "\n";
  os << "symmetry_tol = " << num(c.plant.tolerances.symmetry) << "\n";
  os << "rigid_omega_tol = " << num(c.plant.tolerances.rigid_omega) << "\n";
  os << "damping_offdiag_tol = " << num(c.plant.tolerances.damping_offdiag) << "\n";
  os << "max_condition = " << num(c.plant.tolerances.max_condition) << "\n\n";
  os << "[plant.Phi_s]\n";
  os << "rows = " << m.Phi_s.rows() << "\ncols = " << m.Phi_s.cols() << "\n";
  os << "degree = [" << m.Phi_s.degree_x() << ", " << m.Phi_s.degree_y() << "]\n";
  for (int v = 0; v <= m.Phi_s.degree_x(); ++v) {
    for (int w = 0; w <= m.Phi_s.degree_y(); ++w) {
      if (m.Phi_s.coefficient(v, w).isZero(0.0)) continue;
      os << "c" << v << w << " = " << matrix(m.Phi_s.coefficient(v, w)) << "\n";
    }
  }
  const Workspace& ws = m.workspace;
  os << "\n[workspace]\nx_lo = " << num(ws.x_lo) << "\nx_hi = " << num(ws.x_hi) << "\ny_lo = " << num(ws.y_lo)
     << "\ny_hi = " << num(ws.y_hi) << "\n";
  os << "\n[grid]\nnx = " << c.grid.nx << "\nny = " << c.grid.ny << "\n";
  os << "\n[observer]\nts = " << num(c.observer.ts) << "\nretained_modes = " << list(c.observer.retained_modes)
     << "\nq_scale = " << num(c.observer.q_scale) << "\nq_floor = " << num(c.observer.q_floor)
     << "\nr_scale = " << num(c.observer.r_scale) << "\n";
  os << "\n[weighting]\nmx = " << c.weighting.mx << "\nmy = " << c.weighting.my
     << "\ntraining_duration = " << num(c.weighting.training_duration)
     << "\ntraining_speed = " << num(c.weighting.training_speed)
     << "\nstrict_constraints = " << boolean(c.weighting.strict_constraints) << "\n";
  os << "\n[flex_control]\ncontrolled_modes = " << list(c.flex_control.controlled_modes)
     << "\nzeta_star = " << list(c.flex_control.zeta_star) << "\nomega_star_hz = " << list(c.flex_control.omega_star_hz)
     << "\nq = " << num(c.flex_control.q) << "\n";
  os << "\n[rb_control]\nf_bw = " << list(c.rb_control.f_bw)
     << "\nallow_high_bandwidth = " << boolean(c.rb_control.allow_high_bandwidth)
     << "\nfeedforward = " << boolean(c.rb_control.feedforward)
     << "\nsnap_feedforward = " << list(c.rb_control.snap_feedforward) << "\n";
  const TrajectorySection& t = c.trajectory;
  os << "\n[trajectory]\nx_v = " << num(t.x.v) << "\nx_a = " << num(t.x.a) << "\nx_j = " << num(t.x.j)
     << "\nx_s = " << num(t.x.s) << "\ny_v = " << num(t.y.v) << "\ny_a = " << num(t.y.a) << "\ny_j = " << num(t.y.j)
     << "\ny_s = " << num(t.y.s) << "\nguard = " << num(t.guard) << "\ndwell = " << num(t.dwell) << "\nlines = [";
  for (std::size_t i = 0; i < t.lines.size(); ++i) {
    os << (i ? ",\n  " : "\n  ") << list(std::vector<double>{t.lines[i].x_start, t.lines[i].x_end, t.lines[i].y});
  }
  os << ",\n]\n";
  os << "\n[sim]\nscheduling_source = " << quoted(c.sim.scheduling_source)
     << "\ncheck_stability = " << boolean(c.sim.check_stability) << "\n";
  os << "\n[noise]\nsensor_std = " << num(c.noise.sensor_std) << "\nforce_std = " << num(c.noise.force_std)
     << "\nseed = " << c.noise.seed << "\n";
  const AnalysisSection& a = c.analysis;
  os << "\n[analysis]\nwindow = " << num(a.window) << "\nf_min = " << num(a.f_min) << "\nf_max = " << num(a.f_max)
     << "\npoints = " << a.points << "\nband_halfwidth = " << num(a.band_halfwidth)
     << "\nband_points = " << a.band_points << "\npsd_segment = " << a.psd_segment << "\n";
  return os.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const Config& cfg) { return fnv1a64(print_config(cfg)); }

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_reference() {
  const toml::table defaults = parse_toml(print_config(default_config()), "<defaults>");
  std::ostringstream os;
  os << "# Configuration reference\n\n"
     << "Configuration files are TOML. Unknown sections and keys are rejected. Any key can be overridden\n"
     << "from the environment as `FLEXCTL__<SECTION>__<KEY>=<TOML value>` (case-insensitive), for example\n"
     << "`FLEXCTL__NOISE__SEED=7` or `FLEXCTL__PLANT__PHI_S__C00='[[...]]'`.\n\n"
     << "Defaults describe the SynthStage benchmark plant.\n";
  std::string current;
  for (const KeyDoc& d : schema()) {
    if (current != d.section) {
      current = d.section;
      os << "\n## [" << current << "]\n\n| key | default | description |\n|---|---|---|\n";
    }
    std::string def;
    const toml::node_view<const toml::node> node = defaults[d.section][d.key];
    if (node.is_table()) {
      def = "see `flexctl print-config`";
    } else if (node.is_floating_point()) {
      def = num(*node.value<double>());
    } else if (const toml::array* arr = node.as_array(); arr && arr->is_homogeneous(toml::node_type::floating_point)) {
      def = "[";
      for (std::size_t i = 0; i < arr->size(); ++i) def += (i ? ", " : "") + num(*arr->get(i)->value<double>());
      def += "]";
    } else if (node) {
      std::ostringstream v;
      v << node;
      def = v.str();
      std::replace(def.begin(), def.end(), '\n', ' ');
      if (def.size() > 60) def = "see `flexctl print-config`";
    }
    if (def.rfind("see ", 0) != 0) def = "`" + def + "`";
    os << "| `" << d.key << "` | " << def << " | " << d.doc << " |\n";
  }
  return os.str();
}

}  // namespace flexctl
