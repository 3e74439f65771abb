#include <doctest.h>

#include <string>

#include "flexctl/config.hpp"
#include "flexctl/design.hpp"
#include "flexctl/error.hpp"

using namespace flexctl;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults describe SynthStage and validate") {
    const Config c = default_config();
    CHECK_NOTHROW(c.validate());
    CHECK(c.grid.nx == 3);
    CHECK(c.observer.ts == 50e-6);
    CHECK(c.flex_control.zeta_star[0] == 0.008);
    CHECK(c.trajectory.x.v == 0.8);
    CHECK(c.trajectory.x.a == 35.0);
  }

  TEST_CASE("print and parse round trip") {
    Config c = default_config();
    c.grid.nx = 4;
    c.noise.seed = 123456789012345ULL;
    c.flex_control.omega_star_hz = {1077.25};
    c.trajectory.lines = {{-0.1, 0.1, 0.0}};
    const std::string text = print_config(c);
    const Config back = parse_config(text);
    CHECK(print_config(back) == text);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(back.noise.seed == 123456789012345ULL);
  }

  TEST_CASE("partial files keep defaults") {
    const Config c = parse_config("[grid]\nnx = 2\n");
    CHECK(c.grid.nx == 2);
    CHECK(c.grid.ny == 3);
  }

  TEST_CASE("strict schema names the offending key") {
    CHECK(config_error("[grid]\nnxx = 3\n").find("grid.nxx") != std::string::npos);
    CHECK(config_error("[gird]\nnx = 3\n").find("gird") != std::string::npos);
    CHECK(config_error("[plant]\nM = [[1.0, 0.0], [0.0]]\n").find("plant.M") != std::string::npos);
    CHECK(config_error("[noise]\nsensor_std = \"loud\"\n").find("noise.sensor_std") != std::string::npos);
    CHECK(config_error("[grid\n").size() > 0);
  }

  TEST_CASE("semantic validation") {
    Config c = default_config();
    c.flex_control.controlled_modes = {1};
    CHECK_THROWS_AS(c.validate(), Error);
    c = default_config();
    c.analysis.f_max = 20000.0;
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("environment overrides") {
    Config c = default_config();
    apply_env_overrides(c, {{"FLEXCTL__NOISE__SEED", "7"},
                            {"FLEXCTL__grid__nx", "4"},
                            {"FLEXCTL__RB_CONTROL__F_BW", "[100.0, 100.0, 60.0]"},
                            {"PATH", "/usr/bin"}});
    CHECK(c.noise.seed == 7);
    CHECK(c.grid.nx == 4);
    CHECK(c.rb_control.f_bw[2] == 60.0);
    CHECK_THROWS_AS(apply_env_overrides(c, {{"FLEXCTL__NOISE__SEEDS", "1"}}), Error);
  }

  TEST_CASE("design hash ignores run-only settings") {
    Config a = default_config();
    Config b = a;
    b.noise.seed = 1;
    b.analysis.points = 10;
    b.sim.scheduling_source = "measured";
    CHECK(design_config_hash(a) == design_config_hash(b));
    CHECK(config_hash(a) != config_hash(b));
    b.grid.nx = 2;
    CHECK(design_config_hash(a) != design_config_hash(b));
  }

  TEST_CASE("reference page documents every section") {
    const std::string ref = config_reference();
    for (const char* s : {"plant", "workspace", "grid", "observer", "weighting", "flex_control", "rb_control",
                          "trajectory", "sim", "noise", "analysis"}) {
      CHECK(ref.find(std::string("[") + s + "]") != std::string::npos);
    }
    CHECK(ref.find("training_speed") != std::string::npos);
  }

  TEST_CASE("hash helpers") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hash_hex(0xabcULL) == "0000000000000abc");
  }
}
