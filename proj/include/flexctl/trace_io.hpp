#pragma once

#include <map>
#include <string>
#include <vector>

#include "flexctl/analysis.hpp"
#include "flexctl/design.hpp"
#include "flexctl/simulation.hpp"

namespace flexctl {

// Every file starts with "# key=value ..." provenance lines followed by one
// CSV header row.
struct Provenance {
  std::string config_hash;
  std::string design_hash;
};

// SimTrace columns: t, qx, qy, ref_<a>, y_<a>, e_<a> (axis units), u_rb_<a>,
// u_ff_<a>, u_fm_<a>, u_<a>, x_<j>, qhat_<j>, vs_<i>, wf_<i>, cv_die,
// exposure_die (-1 outside a window).
void write_trace_csv(const SimTrace& trace, const Provenance& prov, const std::string& path);

struct CsvTable {
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  MatrixXd data;  // rows x columns

  Index column(const std::string& name) const;
  bool has(const std::string& name) const;
  VectorXd col(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

// Tracking error (axis units), windows and Ts recovered from a trace file.
struct TraceErrors {
  double ts = 0.0;
  MatrixXd e;  // axes x N
  std::vector<Window> cv_windows;
  std::vector<Window> exposure_windows;
  std::string design_hash;
  std::string flex;
};

TraceErrors read_trace_errors(const std::string& path);

// Training trace: t, qx, qy, u_<a>, y_<a>, x_<j>, written losslessly.
void write_training_csv(const TrainingTrace& trace, const Provenance& prov, const std::string& path);
TrainingTrace read_training_csv(const std::string& path);

// freq_hz then re, im, mag_db, phase_deg for every output/input pair.
void write_frf_csv(const FrfData& frf, const Provenance& prov, const std::string& path);

void write_metrics_csv(const ExposureMetrics& m, const Provenance& prov, const std::string& path);
void write_cps_csv(const CumulativePsd& c, const Provenance& prov, const std::string& path);

std::string format_number(double v);

}  // namespace flexctl
