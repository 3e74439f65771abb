#include "flexctl/trace_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "flexctl/error.hpp"

namespace flexctl {

namespace {

std::string num(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

class CsvOut {
 public:
  CsvOut(const std::string& path, const Provenance& prov, const std::string& kind) : out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorCode::Io, "cannot write " + path);
    path_ = path;
    out_ << "# kind=" << kind << " config_hash=" << prov.config_hash << " design_hash=" << prov.design_hash;
  }
  void meta(const std::string& k, const std::string& v) { out_ << ' ' << k << '=' << v; }
  void header(const std::vector<std::string>& cols) {
    out_ << '\n';
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& vals, int digits) {
    line_.clear();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i) line_ += ',';
      line_ += num(vals[i], digits);
    }
    line_ += '\n';
    out_ << line_;
  }
  ~CsvOut() = default;
  void close() {
    out_.close();
    if (!out_) throw Error(ErrorCode::Io, "failed writing " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
  std::string line_;
};

std::vector<std::string> names(const std::string& prefix, Index n) {
  std::vector<std::string> v;
  for (Index i = 0; i < n; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

void append(std::vector<std::string>& a, const std::vector<std::string>& b) { a.insert(a.end(), b.begin(), b.end()); }

std::vector<double> window_flags(const std::vector<Window>& ws, Index n) {
  std::vector<double> f(static_cast<std::size_t>(n), -1.0);
  for (const Window& w : ws) {
    for (Index k = std::max<Index>(w.begin, 0); k < std::min(w.end, n); ++k) f[static_cast<std::size_t>(k)] = w.die;
  }
  return f;
}

std::vector<Window> windows_from_flags(const VectorXd& f) {
  std::vector<Window> out;
  Index k = 0;
  const Index n = f.size();
  while (k < n) {
    if (f(k) < 0.0) {
      ++k;
      continue;
    }
    Window w;
    w.begin = k;
    w.die = static_cast<int>(f(k));
    while (k < n && f(k) == f(w.begin)) ++k;
    w.end = k;
    out.push_back(w);
  }
  return out;
}

}  // namespace

std::string format_number(double v) { return num(v, 17); }

void write_trace_csv(const SimTrace& tr, const Provenance& prov, const std::string& path) {
  CsvOut out(path, prov, "trace");
  out.meta("ts", num(tr.ts, 17));
  out.meta("flex", tr.flex ? "on" : "off");
  const Index na = tr.reference.rows();
  std::vector<std::string> cols{"t", "qx", "qy"};
  append(cols, names("ref_", na));
  append(cols, names("y_", na));
  append(cols, names("e_", na));
  append(cols, names("u_rb_", na));
  append(cols, names("u_ff_", na));
  append(cols, names("u_fm_", na));
  append(cols, names("u_", na));
  append(cols, names("x_", tr.x.rows()));
  append(cols, names("qhat_", tr.q_hat.rows()));
  append(cols, names("vs_", tr.sensor_noise.rows()));
  append(cols, names("wf_", tr.force_noise.rows()));
  cols.push_back("cv_die");
  cols.push_back("exposure_die");
  out.header(cols);
  const std::vector<double> cv = window_flags(tr.cv_windows, tr.samples());
  const std::vector<double> ex = window_flags(tr.exposure_windows, tr.samples());
  std::vector<double> row;
  for (Index k = 0; k < tr.samples(); ++k) {
    row.clear();
    row.push_back(tr.t(k));
    row.push_back(tr.p(0, k));
    row.push_back(tr.p(1, k));
    for (const MatrixXd* m : {&tr.reference, &tr.y_rb, &tr.e_axis, &tr.u_rb, &tr.u_ff, &tr.u_fm, &tr.u_tilde, &tr.x,
                              &tr.q_hat, &tr.sensor_noise, &tr.force_noise}) {
      for (Index i = 0; i < m->rows(); ++i) row.push_back((*m)(i, k));
    }
    row.push_back(cv[static_cast<std::size_t>(k)]);
    row.push_back(ex[static_cast<std::size_t>(k)]);
    out.row(row, 12);
  }
  out.close();
}

Index CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<Index>(i);
  }
  throw Error(ErrorCode::Io, "CSV lacks column " + name);
}

bool CsvTable::has(const std::string& name) const {
  for (const auto& c : columns) {
    if (c == name) return true;
  }
  return false;
}

VectorXd CsvTable::col(const std::string& name) const { return data.col(column(name)); }

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  CsvTable t;
  std::string line;
  std::vector<std::vector<double>> rows;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream is(line.substr(1));
      std::string kv;
      while (is >> kv) {
        const auto eq = kv.find('=');
        if (eq != std::string::npos) t.meta[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      continue;
    }
    if (t.columns.empty()) {
      std::istringstream is(line);
      std::string c;
      while (std::getline(is, c, ',')) t.columns.push_back(c);
      continue;
    }
    std::vector<double> r;
    const char* p = line.c_str();
    while (*p) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(p, &end);
      if (end == p) throw Error(ErrorCode::Io, path + ":" + std::to_string(no) + ": bad number");
      r.push_back(v);
      p = end;
      if (*p == ',') ++p;
      else if (*p && *p != '\r') throw Error(ErrorCode::Io, path + ":" + std::to_string(no) + ": bad separator");
      else break;
    }
    if (r.size() != t.columns.size()) {
      throw Error(ErrorCode::Io, path + ":" + std::to_string(no) + ": expected " + std::to_string(t.columns.size()) +
                                     " fields");
    }
    rows.push_back(std::move(r));
  }
  if (t.columns.empty()) throw Error(ErrorCode::Io, path + " has no header row");
  t.data.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.data(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return t;
}

TraceErrors read_trace_errors(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (!t.meta.count("kind") || t.meta.at("kind") != "trace") throw Error(ErrorCode::Io, path + " is not a trace file");
  TraceErrors out;
  out.ts = std::strtod(t.meta.count("ts") ? t.meta.at("ts").c_str() : "0", nullptr);
  if (!(out.ts > 0.0)) throw Error(ErrorCode::Io, path + " lacks a valid ts");
  out.design_hash = t.meta.count("design_hash") ? t.meta.at("design_hash") : "";
  out.flex = t.meta.count("flex") ? t.meta.at("flex") : "";
  Index na = 0;
  while (t.has("e_" + std::to_string(na))) ++na;
  if (na == 0) throw Error(ErrorCode::Io, path + " has no error columns");
  out.e.resize(na, t.data.rows());
  for (Index a = 0; a < na; ++a) out.e.row(a) = t.col("e_" + std::to_string(a)).transpose();
  out.cv_windows = windows_from_flags(t.col("cv_die"));
  out.exposure_windows = windows_from_flags(t.col("exposure_die"));
  return out;
}

void write_training_csv(const TrainingTrace& tr, const Provenance& prov, const std::string& path) {
  CsvOut out(path, prov, "training");
  out.meta("ts", num(tr.ts, 17));
  std::vector<std::string> cols{"t", "qx", "qy"};
  append(cols, names("u_", tr.u.rows()));
  append(cols, names("y_", tr.y.rows()));
  append(cols, names("x_", tr.x.rows()));
  out.header(cols);
  std::vector<double> row;
  for (Index k = 0; k < tr.samples(); ++k) {
    row.clear();
    row.push_back(static_cast<double>(k) * tr.ts);
    row.push_back(tr.p(0, k));
    row.push_back(tr.p(1, k));
    for (const MatrixXd* m : {&tr.u, &tr.y, &tr.x}) {
      for (Index i = 0; i < m->rows(); ++i) row.push_back((*m)(i, k));
    }
    out.row(row, 17);
  }
  out.close();
}

TrainingTrace read_training_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  TrainingTrace tr;
  if (!t.meta.count("ts")) throw Error(ErrorCode::Io, path + " lacks ts metadata");
  tr.ts = std::strtod(t.meta.at("ts").c_str(), nullptr);
  auto block = [&](const std::string& prefix) {
    Index n = 0;
    while (t.has(prefix + std::to_string(n))) ++n;
    MatrixXd m(n, t.data.rows());
    for (Index i = 0; i < n; ++i) m.row(i) = t.col(prefix + std::to_string(i)).transpose();
    return m;
  };
  tr.p.resize(2, t.data.rows());
  tr.p.row(0) = t.col("qx").transpose();
  tr.p.row(1) = t.col("qy").transpose();
  tr.u = block("u_");
  tr.y = block("y_");
  tr.x = block("x_");
  return tr;
}

void write_frf_csv(const FrfData& frf, const Provenance& prov, const std::string& path) {
  CsvOut out(path, prov, "frf");
  out.meta("qx", num(frf.p.qx, 17));
  out.meta("qy", num(frf.p.qy, 17));
  out.meta("flex", frf.flex ? "on" : "off");
  const Index no = frf.response.empty() ? 0 : frf.response[0].rows();
  const Index ni = frf.response.empty() ? 0 : frf.response[0].cols();
  std::vector<std::string> cols{"freq_hz"};
  for (Index o = 0; o < no; ++o) {
    for (Index i = 0; i < ni; ++i) {
      const std::string ch = "y" + std::to_string(o) + "_u" + std::to_string(i);
      for (const char* s : {"_re", "_im", "_mag_db", "_phase_deg"}) cols.push_back(ch + s);
    }
  }
  out.header(cols);
  std::vector<double> row;
  for (Index k = 0; k < frf.points(); ++k) {
    row.clear();
    row.push_back(frf.freq_hz(k));
    const MatrixXcd& h = frf.response[static_cast<std::size_t>(k)];
    for (Index o = 0; o < no; ++o) {
      for (Index i = 0; i < ni; ++i) {
        const Complex c = h(o, i);
        row.push_back(c.real());
        row.push_back(c.imag());
        row.push_back(20.0 * std::log10(std::abs(c)));
        row.push_back(std::arg(c) * 180.0 / std::numbers::pi);
      }
    }
    out.row(row, 12);
  }
  out.close();
}

void write_metrics_csv(const ExposureMetrics& m, const Provenance& prov, const std::string& path) {
  CsvOut out(path, prov, "metrics");
  out.meta("window", num(m.window, 17));
  out.header({"die", "axis", "ma_peak", "msd_peak"});
  for (const DieMetrics& d : m.entries) {
    out.row({static_cast<double>(d.die), static_cast<double>(d.axis), d.ma_peak, d.msd_peak}, 12);
  }
  out.close();
}

void write_cps_csv(const CumulativePsd& c, const Provenance& prov, const std::string& path) {
  CsvOut out(path, prov, "cps");
  out.meta("variance", num(c.variance, 17));
  out.header({"freq_hz", "psd", "cumulative"});
  for (Index k = 0; k < c.freq_hz.size(); ++k) out.row({c.freq_hz(k), c.psd(k), c.cumulative(k)}, 12);
  out.close();
}

}  // namespace flexctl
