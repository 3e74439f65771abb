#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "flexctl/trace_io.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("flexctl-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  TempDir log;
  const std::string cmd = env + " \"" FLEXCTL_CLI "\" " + args + " > \"" + (log / "out.txt") + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log / "out.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

void write(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::string read(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_files(const fs::path& dir, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind(prefix, 0) == 0) ++n;
  return n;
}

// Short single-line scan keeps the traces small.
const char* kShortScan =
    "[trajectory]\nlines = [[-0.06, 0.06, 0.0]]\n[weighting]\ntraining_duration = 0.05\n";

}  // namespace

TEST_CASE("design writes nine observers and flags the infeasible constraints") {
  TempDir d;
  write(d / "c.toml", kShortScan);
  const Result r = run("design --config " + (d / "c.toml") + " --out " + d.path.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("9 local observers") != std::string::npos);
  CHECK(r.out.find("InfeasibleConstraints") != std::string::npos);
  CHECK(fs::exists(d / "design.csv"));
}

TEST_CASE("strict constraints turn the warning into exit code 4") {
  TempDir d;
  write(d / "c.toml", kShortScan);
  const Result r = run("design --strict-constraints --config " + (d / "c.toml") + " --out " + d.path.string());
  CHECK(r.code == 4);
  CHECK(r.out.find("scheduling-fit") != std::string::npos);
}

TEST_CASE("configuration errors exit with 2 and name the key") {
  TempDir d;
  write(d / "bad.toml", "[plant]\nM = [[1.0, 2.0], [3.0]]\n");
  Result r = run("design --config " + (d / "bad.toml") + " --out " + d.path.string());
  CHECK(r.code == 2);
  CHECK(r.out.find("plant.M") != std::string::npos);
  write(d / "typo.toml", "[noise]\nsead = 1\n");
  r = run("print-config --config " + (d / "typo.toml"));
  CHECK(r.code == 2);
  CHECK(r.out.find("noise.sead") != std::string::npos);
  CHECK(run("design --no-such-flag").code == 2);
  CHECK(run("").code == 2);
}

TEST_CASE("numerical failures exit with 3") {
  TempDir d;
  write(d / "c.toml", "[observer]\nts = 0.0004\n[analysis]\nf_max = 1000.0\n[rb_control]\nf_bw = [400.0, 400.0, 400.0]\n");
  const Result r = run("design --config " + (d / "c.toml") + " --out " + d.path.string());
  CHECK(r.code == 3);
}

TEST_CASE("environment overrides and print-config") {
  const Result r = run("print-config", "FLEXCTL__GRID__NX=4");
  CHECK(r.code == 0);
  CHECK(r.out.find("nx = 4") != std::string::npos);
  const Result ref = run("config-reference");
  CHECK(ref.code == 0);
  CHECK(ref.out.find("training_speed") != std::string::npos);
}

TEST_CASE("simulate --flex ab writes exactly two traces with identical noise") {
  TempDir d;
  write(d / "c.toml", kShortScan);
  REQUIRE(run("design --config " + (d / "c.toml") + " --out " + d.path.string()).code == 0);
  const Result r = run("simulate --flex ab --config " + (d / "c.toml") + " --design " + (d / "design.csv") +
                       " --out " + (d / "sim"));
  REQUIRE(r.code == 0);
  CHECK(count_files(d / "sim", "trace_") == 2);
  const flexctl::CsvTable a = flexctl::read_csv(d / "sim/trace_baseline.csv");
  const flexctl::CsvTable b = flexctl::read_csv(d / "sim/trace_extended.csv");
  for (const auto& col : a.columns) {
    if (col.rfind("vs_", 0) == 0 || col.rfind("wf_", 0) == 0) CHECK(a.col(col) == b.col(col));
  }
  CHECK(a.meta.count("design_hash") == 1);

  const Result m = run("metrics --config " + (d / "c.toml") + " --trace " + (d / "sim/trace_baseline.csv") +
                       " --trace " + (d / "sim/trace_extended.csv") + " --out " + (d / "m"));
  CHECK(m.code == 0);
  CHECK(fs::exists(d / "m/comparison.csv"));
  CHECK(fs::exists(d / "m/metrics_trace_baseline.csv"));
}

TEST_CASE("design from another configuration is refused") {
  TempDir d;
  write(d / "c.toml", kShortScan);
  REQUIRE(run("design --config " + (d / "c.toml") + " --out " + d.path.string()).code == 0);
  const Result r = run("simulate --design " + (d / "design.csv") + " --out " + d.path.string());
  CHECK(r.code == 2);
  CHECK(r.out.find("different configuration") != std::string::npos);
  // The seed is a run setting and does not invalidate the design.
  CHECK(run("simulate --flex off --seed 3 --config " + (d / "c.toml") + " --design " + (d / "design.csv") +
            " --out " + d.path.string())
            .code == 0);
}

TEST_CASE("fit-weights round trips a saved training trace") {
  TempDir d;
  write(d / "c.toml", kShortScan);
  REQUIRE(run("design --config " + (d / "c.toml") + " --out " + d.path.string()).code == 0);
  const std::string first = read(d / "design.csv");
  REQUIRE(run("fit-weights --save-training --config " + (d / "c.toml") + " --design " + (d / "design.csv") +
              " --out " + (d / "a"))
              .code == 0);
  REQUIRE(run("fit-weights --config " + (d / "c.toml") + " --design " + (d / "design.csv") + " --training " +
              (d / "a/training.csv") + " --out " + (d / "b"))
              .code == 0);
  CHECK(read(d / "a/design.csv") == first);
  CHECK(read(d / "b/design.csv") == first);
}

TEST_CASE("frf at the center reports the suppression next to the peak law") {
  TempDir d;
  write(d / "c.toml", kShortScan);
  REQUIRE(run("design --config " + (d / "c.toml") + " --out " + d.path.string()).code == 0);
  Result r = run("frf --points center --config " + (d / "c.toml") + " --design " + (d / "design.csv") + " --out " +
                 (d / "f"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("peak law 18.06 dB") != std::string::npos);
  CHECK(fs::exists(d / "f/frf_0_off.csv"));
  CHECK(fs::exists(d / "f/frf_0_on.csv"));
  const flexctl::CsvTable t = flexctl::read_csv(d / "f/frf_0_on.csv");
  CHECK(t.has("y0_u0_mag_db"));
  r = run("frf --points list --at 0.1,-0.1 --at 0,0 --config " + (d / "c.toml") + " --design " + (d / "design.csv") +
          " --out " + (d / "g"));
  CHECK(r.code == 0);
  CHECK(count_files(d / "g", "frf_") == 4);
}

TEST_CASE("zero reference and zero noise give all-zero metrics") {
  TempDir d;
  write(d / "c.toml",
        "[trajectory]\nlines = [[0.0, 0.0, 0.0]]\nguard = 0.0\ndwell = 0.01\n"
        "[noise]\nsensor_std = 0.0\nforce_std = 0.0\n[weighting]\ntraining_duration = 0.05\n");
  REQUIRE(run("design --config " + (d / "c.toml") + " --out " + d.path.string()).code == 0);
  REQUIRE(run("simulate --flex off --config " + (d / "c.toml") + " --design " + (d / "design.csv") + " --out " +
              d.path.string())
              .code == 0);
  REQUIRE(run("metrics --config " + (d / "c.toml") + " --trace " + (d / "trace_baseline.csv") + " --out " +
              (d / "m"))
              .code == 0);
  const flexctl::CsvTable t = flexctl::read_csv(d / "m/metrics_trace_baseline.csv");
  REQUIRE(t.data.rows() > 0);
  for (const char* c : {"ma_peak", "msd_peak"}) CHECK(t.col(c).cwiseAbs().maxCoeff() == 0.0);
}
