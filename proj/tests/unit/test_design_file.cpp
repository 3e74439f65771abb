#include <doctest.h>

#include <string>

#include "flexctl/config.hpp"
#include "flexctl/design.hpp"
#include "flexctl/design_file.hpp"
#include "flexctl/error.hpp"

using namespace flexctl;

namespace {

ControllerDesign sample_design() {
  Config cfg = default_config();
  cfg.weighting.training_duration = 0.05;
  const PlantStack stack = build_plant(cfg);
  return run_design(cfg, stack);
}

std::string replace_first(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_SUITE("design-file") {
  TEST_CASE("write, read, write is bit-identical") {
    const ControllerDesign d = sample_design();
    const std::string a = write_design(d);
    const ControllerDesign back = read_design(a);
    CHECK(write_design(back) == a);
    CHECK(back.bank.size() == 9);
    CHECK(back.config_hash == d.config_hash);
    CHECK(back.weights.theta == d.weights.theta);
    CHECK(back.bank.observers[3].gain() == d.bank.observers[3].gain());
    CHECK(back.bank.observers[3].a_cl() == d.bank.observers[3].a_cl());
    CHECK(back.pid[1].lowpass.a1 == d.pid[1].lowpass.a1);
    CHECK(back.warnings == d.warnings);
  }

  TEST_CASE("damaged files are rejected") {
    const std::string a = write_design(sample_design());
    CHECK_THROWS_AS(read_design("not a design\n"), Error);
    CHECK_THROWS_AS(read_design(replace_first(a, "\nts,", "\nts,1,1,1\nts,")), Error);
    CHECK_THROWS_AS(read_design(replace_first(a, "\ngains.ks,", "\nunused,")), Error);
    CHECK_THROWS_AS(read_design(a.substr(0, a.size() / 2)), Error);
  }
}
