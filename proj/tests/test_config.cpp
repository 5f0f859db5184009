#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "combcollide/config.hpp"
#include "combcollide/errors.hpp"

using namespace comb;

TEST_CASE("defaults round-trip through the header block") {
  ExperimentConfig c;
  const auto back = parse_config_text(header_block(c));
  CHECK(to_pairs(back) == to_pairs(c));
}

TEST_CASE("output files: only the header block is read, plumbing is left out") {
  ExperimentConfig c;
  c.seed = 42;
  c.jobs = 8;
  c.out = "elsewhere";
  const std::string file = header_block(c) + "replica_id,sigma\n0,1\n";
  CHECK(file.find("jobs") == std::string::npos);
  const auto back = parse_config_text(file);
  CHECK(back.seed == 42);
  CHECK(back.jobs == 1);
  CHECK(back.out == "out");
}

TEST_CASE("every field round-trips") {
  ExperimentConfig c;
  c.command = "simulate";
  c.family = "custom";
  c.custom_height = {0, 1, 3};
  c.alpha = 0.1 + 0.2;  // not exactly representable in short decimal form
  c.alpha_grid = {1.0 / 3.0, 2.0};
  c.seed = 18446744073709551615ULL;
  c.starts = {{-3, 0}, {4, 2}};
  c.checkpoints = {};
  c.x = {-5, 1};
  c.work_limit = 1.5e9;
  const auto back = parse_config_text(header_block(c, "## "));
  CHECK(to_pairs(back) == to_pairs(ExperimentConfig{}));  // "## " lines are plain comments
  const auto back2 = parse_config_text(header_block(c));
  CHECK(to_pairs(back2) == to_pairs(c));
  CHECK(back2.alpha == c.alpha);
  CHECK(back2.seed == c.seed);
  CHECK(back2.starts == c.starts);
}

TEST_CASE("precedence: flags over file over defaults") {
  const std::string path = "test_config_tmp.cfg";
  {
    std::ofstream f(path);
    f << "# a comment\n\nalpha = 2\nseed=9\nN_grid = 16, 32\n";
  }
  ExperimentConfig c = load_config_file(path);
  std::remove(path.c_str());
  CHECK(c.alpha == 2.0);
  CHECK(c.seed == 9);
  CHECK(c.N_grid == std::vector<Coord>{16, 32});
  CHECK(c.h == 4);  // default kept
  set_value(c, "seed", "11");  // a flag applied last
  CHECK(c.seed == 11);
  CHECK(c.alpha == 2.0);
}

TEST_CASE("errors") {
  ExperimentConfig c;
  CHECK_THROWS_AS(set_value(c, "nope", "1"), ConfigError);
  CHECK_THROWS_AS(set_value(c, "alpha", "abc"), ConfigError);
  CHECK_THROWS_AS(set_value(c, "N", "1.5"), ConfigError);
  CHECK_THROWS_AS(set_value(c, "x", "3"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("alpha 2\n"), ConfigError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/file.cfg"), ConfigError);
  c.N_grid.clear();
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = ExperimentConfig{};
  c.family = "weird";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = ExperimentConfig{};
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("spec construction") {
  ExperimentConfig c;
  c.family = "custom";
  c.custom_height = {0, 2, 5};
  const auto s = make_spec(c, 1.0);
  CHECK(s.tooth_height(0) == 0);
  CHECK(s.tooth_height(-1) == 2);
  CHECK(s.tooth_height(100) == 5);
  c.family = "log";
  CHECK(make_spec(c, 1.0).tooth_height(100) == 4);
  c.family = "poly";
  CHECK(make_spec(c, 0.5).tooth_height(100) == 10);
  c.horizon = 0;
  const auto sim = sim_config(c, 1.0);
  CHECK(sim.horizon == default_horizon(sim.spec, c.N));
}
