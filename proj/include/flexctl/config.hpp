#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flexctl/modal_model.hpp"
#include "flexctl/trajectory.hpp"

namespace flexctl {

struct PlantSection {
  MechModel model;             // defaults to SynthStage
  ModelTolerances tolerances;
};

struct GridSection {
  int nx = 3;
  int ny = 3;
};

struct ObserverSection {
  double ts = 50e-6;
  std::vector<Index> retained_modes{0};  // flexible-mode indices, 0 = lowest
  double q_scale = 1e-6;
  double q_floor = 1e-9;
  double r_scale = 1e-12;
};

struct WeightingSection {
  int mx = 1;
  int my = 1;
  double training_duration = 2.0;  // s
  double training_speed = 0.8;     // m/s raster speed
  bool strict_constraints = false;
};

struct FlexControlSection {
  std::vector<Index> controlled_modes{0};
  std::vector<double> zeta_star{0.008};
  std::vector<double> omega_star_hz{};  // empty: keep open-loop frequencies
  double q = 5.0;
};

struct RbControlSection {
  std::vector<double> f_bw{120.0, 120.0, 80.0};
  bool allow_high_bandwidth = true;  // f_bw above 1/10 of the first resonance warns instead of failing
  bool feedforward = true;
  std::vector<double> snap_feedforward{0.0, 0.0, 0.0};
};

struct TrajectorySection {
  MotionLimits x{0.8, 35.0, 3500.0, 7e5};
  MotionLimits y{0.38, 15.0, 3500.0, 7e5};
  double guard = 0.010;
  double dwell = 0.005;
  std::vector<ScanLine> lines = demo_layout();
};

struct SimSection {
  std::string scheduling_source = "reference";  // reference | measured
  bool check_stability = true;
};

struct NoiseSection {
  double sensor_std = 0.3e-9;  // m (rad on rotational channels)
  double force_std = 1e-3;     // N
  std::uint64_t seed = 20240611;
};

struct AnalysisSection {
  double window = 0.005;  // s
  double f_min = 10.0;
  double f_max = 5000.0;
  int points = 600;
  double band_halfwidth = 0.10;  // relative to the mode frequency
  int band_points = 4001;
  int psd_segment = 2048;
};

struct Config {
  PlantSection plant;
  GridSection grid;
  ObserverSection observer;
  WeightingSection weighting;
  FlexControlSection flex_control;
  RbControlSection rb_control;
  TrajectorySection trajectory;
  SimSection sim;
  NoiseSection noise;
  AnalysisSection analysis;

  void validate() const;
};

// Default configuration (SynthStage).
Config default_config();

// Parses TOML text; unknown sections/keys and malformed values raise
// Error(Config) naming the key. Keys missing from the file keep defaults.
Config parse_config(const std::string& text, const std::string& origin = "<config>");
Config load_config(const std::string& path);

// Applies FLEXCTL__SECTION__KEY=value overrides (value in TOML syntax).
void apply_env_overrides(Config& cfg, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> collect_env_overrides();

// Canonical TOML rendering; parse_config(print_config(c)) == c.
std::string print_config(const Config& cfg);
std::uint64_t config_hash(const Config& cfg);
std::string hash_hex(std::uint64_t h);
std::uint64_t fnv1a64(const std::string& bytes);

// Markdown page documenting every key and its default.
std::string config_reference();

}  // namespace flexctl
