#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flexctl/analysis.hpp"
#include "flexctl/config.hpp"
#include "flexctl/design.hpp"
#include "flexctl/design_file.hpp"
#include "flexctl/error.hpp"
#include "flexctl/simulation.hpp"
#include "flexctl/trace_io.hpp"

namespace fs = std::filesystem;
using namespace flexctl;

namespace {

struct Options {
  std::string config;
  std::string design;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool strict = false;
  std::string flex = "ab";
  std::string points = "center";
  std::vector<std::string> at;
  std::string training;
  bool save_training = false;
  std::vector<std::string> traces;
};

// Stage label reported when a command fails.
std::string g_stage = "startup";

Config load(const Options& o) {
  g_stage = "config";
  Config cfg = o.config.empty() ? default_config() : load_config(o.config);
  apply_env_overrides(cfg, collect_env_overrides());
  if (o.seed_set) cfg.noise.seed = o.seed;
  if (o.strict) cfg.weighting.strict_constraints = true;
  cfg.validate();
  return cfg;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + dir + ": " + ec.message());
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
}

struct Loaded {
  Config cfg;
  PlantStack stack;
  ControllerDesign design;
  Provenance prov;
};

Loaded load_with_design(const Options& o) {
  Loaded l;
  l.cfg = load(o);
  g_stage = "modal-model";
  l.stack = build_plant(l.cfg);
  if (o.design.empty()) throw Error(ErrorCode::Config, "--design is required");
  g_stage = "design-file";
  const std::string text = read_file(o.design);
  l.design = read_design(text);
  if (l.design.config_hash != design_config_hash(l.cfg)) {
    throw Error(ErrorCode::Config, "design file " + o.design + " was produced from a different configuration");
  }
  l.prov = {hash_hex(config_hash(l.cfg)), hash_hex(fnv1a64(text))};
  return l;
}

void print_warnings(const ControllerDesign& d) {
  for (const auto& w : d.warnings) std::cerr << "warning: " << w << "\n";
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void summarize_weights(const WeightingScheme& w) {
  const LseReport& r = w.report;
  std::cout << "weights: basis (" << w.basis.mx << ", " << w.basis.my << "), " << w.observers()
            << " observers, constraint residual " << fmt("%.3e", r.constraint_residual) << ", rank "
            << r.constraint_rank << ", free dimensions " << r.free_dimensions
            << (r.infeasible_constraints ? ", INFEASIBLE constraints" : "")
            << (r.regression_active ? ", regression active" : ", regression inactive") << "\n";
}

int cmd_design(const Options& o) {
  const Config cfg = load(o);
  g_stage = "modal-model";
  const PlantStack stack = build_plant(cfg);
  g_stage = "observer-synthesis";
  ControllerDesign d = design_controllers(cfg, stack);
  g_stage = "scheduling-fit";
  const TrainingTrace tr = generate_training(cfg, stack, d);
  d.weights = fit_weights(stack, d.bank, d.weights.basis, tr, cfg.weighting.strict_constraints);
  if (d.weights.report.infeasible_constraints) {
    d.warnings.push_back("InfeasibleConstraints: W_i(p_j) = delta_ij cannot hold for every grid point; residual " +
                         fmt("%.6g", d.weights.report.constraint_residual));
  }
  g_stage = "design-file";
  ensure_dir(o.out);
  const std::string path = path_in(o.out, "design.csv");
  save_design(d, path);
  print_warnings(d);
  std::cout << "design: " << d.bank.size() << " local observers, Ts " << d.ts << " s, "
            << d.gains.modes() << " controlled mode(s), config " << hash_hex(d.config_hash) << "\n";
  summarize_weights(d.weights);
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_fit(const Options& o) {
  Loaded l = load_with_design(o);
  g_stage = "scheduling-fit";
  TrainingTrace tr;
  if (!o.training.empty()) {
    tr = read_training_csv(o.training);
  } else {
    tr = generate_training(l.cfg, l.stack, l.design);
  }
  ensure_dir(o.out);
  if (o.save_training) write_training_csv(tr, l.prov, path_in(o.out, "training.csv"));
  l.design.weights = fit_weights(l.stack, l.design.bank, l.design.weights.basis, tr, l.cfg.weighting.strict_constraints);
  if (l.design.weights.report.infeasible_constraints) {
    std::cerr << "warning: InfeasibleConstraints: residual "
              << fmt("%.6g", l.design.weights.report.constraint_residual) << "\n";
  }
  g_stage = "design-file";
  const std::string path = path_in(o.out, "design.csv");
  save_design(l.design, path);
  summarize_weights(l.design.weights);
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_simulate(const Options& o) {
  Loaded l = load_with_design(o);
  g_stage = "trajectory";
  const ReferenceTrace ref = scan_reference(l.cfg, l.stack.n_rb());
  g_stage = "simulation";
  ensure_dir(o.out);
  SimConfig sc = SimConfig::from(l.cfg, true);
  std::vector<std::pair<std::string, SimTrace>> runs;
  if (o.flex == "ab") {
    AbTraces ab = ab_compare(l.stack, l.design, ref, sc);
    runs.emplace_back("trace_baseline.csv", std::move(ab.baseline));
    runs.emplace_back("trace_extended.csv", std::move(ab.extended));
  } else if (o.flex == "on" || o.flex == "off") {
    sc.flex = o.flex == "on";
    runs.emplace_back(sc.flex ? "trace_extended.csv" : "trace_baseline.csv", simulate(l.stack, l.design, ref, sc));
  } else {
    throw Error(ErrorCode::Config, "--flex must be on, off or ab");
  }
  for (const auto& [name, tr] : runs) {
    const std::string path = path_in(o.out, name);
    write_trace_csv(tr, l.prov, path);
    std::cout << "wrote " << path << " (" << tr.samples() << " samples)\n";
  }
  return 0;
}

std::vector<SchedulingPoint> frf_points(const Options& o, const Loaded& l) {
  if (o.points == "center") return {l.stack.plant.workspace().center()};
  if (o.points == "grid") return l.design.bank.points();
  if (o.points == "list") {
    std::vector<SchedulingPoint> pts;
    for (const auto& s : o.at) {
      double x = 0.0;
      double y = 0.0;
      char sep = 0;
      std::istringstream is(s);
      if (!(is >> x >> sep >> y) || sep != ',') throw Error(ErrorCode::Config, "--at expects qx,qy: " + s);
      pts.push_back({x, y});
    }
    if (pts.empty()) throw Error(ErrorCode::Config, "--points list needs at least one --at qx,qy");
    return pts;
  }
  throw Error(ErrorCode::Config, "--points must be center, grid or list");
}

int cmd_frf(const Options& o) {
  Loaded l = load_with_design(o);
  g_stage = "analysis";
  ensure_dir(o.out);
  const AnalysisSection& a = l.cfg.analysis;
  const VectorXd grid = log_grid(a.f_min, a.f_max, a.points);
  const std::vector<SchedulingPoint> pts = frf_points(o, l);
  std::ostringstream table;
  table << "qx,qy,mode,f_peak_off_hz,f_peak_on_hz,peak_off,peak_on,suppression_db,law_db\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const SchedulingPoint& p = pts[i];
    for (bool flex : {false, true}) {
      const FrfData frf = equivalent_mechanics_frf(l.stack, l.design, p, flex, grid);
      write_frf_csv(frf, l.prov, path_in(o.out, "frf_" + std::to_string(i) + (flex ? "_on" : "_off") + ".csv"));
    }
    for (Index m = 0; m < l.design.gains.modes(); ++m) {
      const PeakSuppression s = mode_suppression(l.stack, l.design, p, m, a);
      table << format_number(p.qx) << ',' << format_number(p.qy) << ',' << l.design.gains.controlled[m] << ','
            << fmt("%.6f", s.f_peak_off) << ',' << fmt("%.6f", s.f_peak_on) << ',' << fmt("%.9e", s.peak_off) << ','
            << fmt("%.9e", s.peak_on) << ',' << fmt("%.4f", s.db) << ',' << fmt("%.4f", s.law_db) << '\n';
      std::cout << "suppression mode " << l.design.gains.controlled[m] << " at (" << p.qx << ", " << p.qy
                << "): " << fmt("%.2f", s.db) << " dB (peak law " << fmt("%.2f", s.law_db) << " dB, peak "
                << fmt("%.1f", s.f_peak_off) << " Hz)\n";
    }
  }
  write_file(path_in(o.out, "suppression.csv"), "# kind=suppression config_hash=" + l.prov.config_hash +
                                                   " design_hash=" + l.prov.design_hash + "\n" + table.str());
  return 0;
}

int cmd_metrics(const Options& o) {
  g_stage = "config";
  Config cfg = o.config.empty() ? default_config() : load_config(o.config);
  apply_env_overrides(cfg, collect_env_overrides());
  if (o.traces.empty()) throw Error(ErrorCode::Config, "metrics needs at least one --trace");
  g_stage = "analysis";
  ensure_dir(o.out);
  std::vector<ExposureMetrics> all;
  std::vector<std::string> labels;
  for (const auto& path : o.traces) {
    const TraceErrors te = read_trace_errors(path);
    const Provenance prov{"", te.design_hash};
    const std::string stem = fs::path(path).stem().string();
    const ExposureMetrics m = ma_msd(te.e, te.ts, te.exposure_windows, cfg.analysis.window);
    write_metrics_csv(m, prov, path_in(o.out, "metrics_" + stem + ".csv"));
    for (const Window& w : te.exposure_windows) {
      if (w.size() < cfg.analysis.psd_segment) continue;
      const CumulativePsd c = cumulative_psd(te.e.row(0).segment(w.begin, w.size()).transpose(), te.ts,
                                             cfg.analysis.psd_segment);
      write_cps_csv(c, prov, path_in(o.out, "cps_" + stem + "_die" + std::to_string(w.die) + ".csv"));
    }
    all.push_back(m);
    labels.push_back(stem);
  }
  std::ostringstream table;
  table << "die,axis";
  for (const auto& s : labels) table << ",msd_" << s << ",ma_" << s;
  table << '\n';
  for (std::size_t e = 0; e < all[0].entries.size(); ++e) {
    const DieMetrics& d = all[0].entries[e];
    table << d.die << ',' << d.axis;
    for (const auto& m : all) {
      const DieMetrics& x = m.at(d.die, d.axis);
      table << ',' << fmt("%.6e", x.msd_peak) << ',' << fmt("%.6e", x.ma_peak);
    }
    table << '\n';
  }
  write_file(path_in(o.out, "comparison.csv"), table.str());
  std::cout << table.str();
  return 0;
}

int cmd_demo(const Options& o) {
  const Config cfg = load(o);
  g_stage = "modal-model";
  const PlantStack stack = build_plant(cfg);
  g_stage = "design";
  const ControllerDesign d = run_design(cfg, stack);
  print_warnings(d);
  ensure_dir(o.out);
  const std::string design_text = write_design(d);
  write_file(path_in(o.out, "design.csv"), design_text);
  const Provenance prov{hash_hex(config_hash(cfg)), hash_hex(fnv1a64(design_text))};
  std::vector<std::string> files{"design.csv"};
  std::ostringstream summary;
  summary << "config " << prov.config_hash << ", design " << prov.design_hash << "\n";
  summary << d.bank.size() << " local observers; weight constraint residual "
          << fmt("%.3e", d.weights.report.constraint_residual)
          << (d.weights.report.infeasible_constraints ? " (infeasible, least-squares anchoring)" : "") << "\n";

  g_stage = "analysis";
  const AnalysisSection& a = cfg.analysis;
  const SchedulingPoint center = stack.plant.workspace().center();
  const VectorXd grid = log_grid(a.f_min, a.f_max, a.points);
  for (bool flex : {false, true}) {
    const std::string name = flex ? "frf_center_on.csv" : "frf_center_off.csv";
    write_frf_csv(equivalent_mechanics_frf(stack, d, center, flex, grid), prov, path_in(o.out, name));
    files.push_back(name);
  }
  std::ostringstream sup;
  sup << "# kind=suppression config_hash=" << prov.config_hash << " design_hash=" << prov.design_hash << "\n";
  sup << "qx,qy,suppression_db,law_db,f_peak_off_hz,f_peak_on_hz\n";
  double worst = 1e300;
  double best = -1e300;
  for (const SchedulingPoint& p : d.bank.points()) {
    const PeakSuppression s = mode_suppression(stack, d, p, 0, a);
    sup << format_number(p.qx) << ',' << format_number(p.qy) << ',' << fmt("%.4f", s.db) << ','
        << fmt("%.4f", s.law_db) << ',' << fmt("%.6f", s.f_peak_off) << ',' << fmt("%.6f", s.f_peak_on) << "\n";
    worst = std::min(worst, s.db);
    best = std::max(best, s.db);
    if (p == center) summary << "suppression at center: " << fmt("%.2f", s.db) << " dB (peak law " << fmt("%.2f", s.law_db) << " dB)\n";
  }
  summary << "suppression over the grid: " << fmt("%.2f", worst) << " .. " << fmt("%.2f", best) << " dB\n";
  write_file(path_in(o.out, "suppression.csv"), sup.str());
  files.push_back("suppression.csv");

  g_stage = "simulation";
  const ReferenceTrace ref = scan_reference(cfg, stack.n_rb());
  const AbTraces ab = ab_compare(stack, d, ref, SimConfig::from(cfg, true));

  g_stage = "analysis";
  const Index axis = ref.scan_axis;
  const ExposureMetrics mb = ma_msd(ab.baseline.e_axis, cfg.observer.ts, ref.exposure_windows, a.window);
  const ExposureMetrics me = ma_msd(ab.extended.e_axis, cfg.observer.ts, ref.exposure_windows, a.window);
  std::ostringstream msd;
  msd << "# kind=msd_table config_hash=" << prov.config_hash << " design_hash=" << prov.design_hash
      << " window=" << format_number(a.window) << "\n";
  msd << "die,axis,msd_baseline,msd_extended,ma_baseline,ma_extended\n";
  for (const DieMetrics& b : mb.entries) {
    const DieMetrics& e = me.at(b.die, b.axis);
    msd << b.die << ',' << b.axis << ',' << fmt("%.6e", b.msd_peak) << ',' << fmt("%.6e", e.msd_peak) << ','
        << fmt("%.6e", b.ma_peak) << ',' << fmt("%.6e", e.ma_peak) << "\n";
  }
  write_file(path_in(o.out, "msd_table.csv"), msd.str());
  files.push_back("msd_table.csv");
  summary << "worst exposure MSD on the scan axis: baseline " << fmt("%.4e", mb.worst_msd(axis)) << " m, extended "
          << fmt("%.4e", me.worst_msd(axis)) << " m\n";

  const int die = std::min<int>(2, static_cast<int>(ref.exposure_windows.size()) - 1);
  const Window& ex = ref.exposure_windows[static_cast<std::size_t>(die)];
  const Window& cv = ref.cv_windows[static_cast<std::size_t>(die)];
  std::ostringstream err;
  err << "# kind=die_error die=" << die << " config_hash=" << prov.config_hash << " design_hash=" << prov.design_hash
      << "\n";
  err << "t,e_baseline,e_extended,exposure\n";
  for (Index k = cv.begin; k < cv.end; ++k) {
    err << fmt("%.6f", ab.baseline.t(k)) << ',' << fmt("%.9e", ab.baseline.e_axis(axis, k)) << ','
        << fmt("%.9e", ab.extended.e_axis(axis, k)) << ',' << (k >= ex.begin && k < ex.end ? 1 : 0) << "\n";
  }
  write_file(path_in(o.out, "die3_error.csv"), err.str());
  files.push_back("die3_error.csv");

  const double f1 = d.gains.omega(0) / (2.0 * 3.14159265358979323846);
  const double lo = f1 * (1.0 - a.band_halfwidth);
  const double hi = f1 * (1.0 + a.band_halfwidth);
  for (bool flex : {false, true}) {
    const SimTrace& tr = flex ? ab.extended : ab.baseline;
    const CumulativePsd c =
        cumulative_psd(tr.e_axis.row(axis).segment(ex.begin, ex.size()).transpose(), cfg.observer.ts, a.psd_segment);
    const std::string name = flex ? "cps_extended.csv" : "cps_baseline.csv";
    write_cps_csv(c, prov, path_in(o.out, name));
    files.push_back(name);
    summary << "die " << die << " cPS step across " << fmt("%.0f", lo) << ".." << fmt("%.0f", hi) << " Hz ("
            << (flex ? "extended" : "baseline") << "): " << fmt("%.4e", c.band_power(lo, hi)) << " m^2\n";
  }
  write_file(path_in(o.out, "summary.txt"), summary.str());
  files.push_back("summary.txt");

  std::ostringstream sums;
  for (const auto& f : files) sums << hash_hex(fnv1a64(read_file(path_in(o.out, f)))) << "  " << f << "\n";
  write_file(path_in(o.out, "checksums.txt"), sums.str());
  std::cout << summary.str();
  std::cout << "report written to " << o.out << "\n";
  return 0;
}

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config:
    case ErrorCode::Io:
      return 2;
    case ErrorCode::InfeasibleConstraints:
      return 4;
    default:
      return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gain-scheduled modal observer and active damping toolkit"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* c, bool design) {
    c->add_option("--config", o.config, "TOML configuration file (defaults describe SynthStage)");
    c->add_option("--out", o.out, "Output directory")->capture_default_str();
    c->add_option("--seed", o.seed, "Noise seed override")->each([&](const std::string&) { o.seed_set = true; });
    c->add_flag("--strict-constraints", o.strict, "Fail (exit 4) when the weight constraints are infeasible");
    if (design) c->add_option("--design", o.design, "Design file from `flexctl design`")->required();
  };
  CLI::App* design = app.add_subcommand("design", "Synthesize observers, weights, gains and filters");
  common(design, false);
  CLI::App* fit = app.add_subcommand("fit-weights", "Refit the observer weights from a training trace");
  common(fit, true);
  fit->add_option("--training", o.training, "Training trace CSV to ingest instead of simulating one");
  fit->add_flag("--save-training", o.save_training, "Write the training trace used to <out>/training.csv");
  CLI::App* sim = app.add_subcommand("simulate", "Closed-loop scan simulation");
  common(sim, true);
  sim->add_option("--flex", o.flex, "Flexible-mode loop: on, off or ab")
      ->check(CLI::IsMember({"on", "off", "ab"}))
      ->capture_default_str();
  CLI::App* frf = app.add_subcommand("frf", "Equivalent-mechanics FRFs with the flexible loop off and on");
  common(frf, true);
  frf->add_option("--points", o.points, "center, grid or list")
      ->check(CLI::IsMember({"center", "grid", "list"}))
      ->capture_default_str();
  frf->add_option("--at", o.at, "Frozen point qx,qy (with --points list)");
  CLI::App* metrics = app.add_subcommand("metrics", "MA/MSD and cumulative PSD of trace files");
  metrics->add_option("--trace", o.traces, "Trace CSV (repeat to compare)")->required();
  metrics->add_option("--config", o.config, "Configuration supplying the analysis settings");
  metrics->add_option("--out", o.out, "Output directory")->capture_default_str();
  CLI::App* demo = app.add_subcommand("demo", "Full SynthStage pipeline and report");
  common(demo, false);
  CLI::App* pc = app.add_subcommand("print-config", "Print the effective configuration");
  pc->add_option("--config", o.config, "TOML configuration file");
  CLI::App* ref = app.add_subcommand("config-reference", "Print the configuration reference page");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*design) return cmd_design(o);
    if (*fit) return cmd_fit(o);
    if (*sim) return cmd_simulate(o);
    if (*frf) return cmd_frf(o);
    if (*metrics) return cmd_metrics(o);
    if (*demo) return cmd_demo(o);
    if (*pc) {
      std::cout << print_config(load(o));
      return 0;
    }
    if (*ref) {
      std::cout << config_reference();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "flexctl: " << g_stage << " stage failed: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "flexctl: " << g_stage << " stage failed: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
