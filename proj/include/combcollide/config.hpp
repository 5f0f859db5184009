#pragma once

// Flat key = value configuration shared by every subcommand.
//
// Precedence is flags > file > defaults. Every output file carries the full
// configuration as `# config: key = value` lines; feeding such a file back
// through parse_config_text reproduces the configuration exactly.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "combcollide/comb_graph.hpp"
#include "combcollide/estimates.hpp"
#include "combcollide/walk_sim.hpp"

namespace comb {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  std::string command;  // graph | kernel | resist | simulate | bounds | phase | growth | moments

  // comb
  std::string family = "log";  // log | poly | custom
  double alpha = 1.0;
  std::vector<double> alpha_grid{0.5, 1.0, 1.5, 2.0};
  double log_base = 0.0;  // 0 means natural log
  std::vector<Coord> custom_height;  // heights for |n| = 0, 1, ...; the last entry repeats

  // reproducibility and plumbing
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::string out = "out";

  // walkers and regions
  Coord N = 16;
  Coord h = 4;
  double eps = 0.3;
  double delta = 0.05;
  double c2 = 0.5;
  std::vector<Vertex> starts{{0, 0}, {0, 0}, {0, 0}};
  std::int64_t horizon = 0;  // 0 means the default 2 N^2 log^alpha N
  std::int64_t replicas = 1000;
  std::int64_t max_collision_times = 64;
  std::vector<std::int64_t> checkpoints;
  std::string mixed_parity = "warn";  // warn | reject | ignore
  std::int64_t max_steps = 100000000;  // exit-time simulations

  // grids
  std::vector<Coord> N_grid{16, 32, 64, 128};
  std::vector<Coord> r_grid{4, 8, 16, 32};
  std::vector<Coord> L_grid{32, 64, 128, 256};
  std::vector<std::int64_t> n_grid{16, 32, 64, 128, 256};
  std::string bound = "all";

  // single-point queries
  Vertex x{0, 0};
  Vertex y{0, 0};
  std::int64_t n = 10;
  Coord radius = 10;

  // bound checks
  double window_c1 = 0.25;
  double window_c2 = 0.5;
  double hk1d_eps = 0.25;
  double hk1d_c1 = 0.1;
  double hk1d_c2 = 0.5;
  double trend_tolerance = 0.05;
  double stability_factor = 2.0;
  double work_limit = 2e10;
  std::int64_t mc_replicas = 20000;
  std::int64_t lemma21_n_max = 60;
  std::int64_t quad_n_max = 1000;
};

// Ordered (key, value) pairs covering every field.
std::vector<std::pair<std::string, std::string>> to_pairs(const ExperimentConfig& c);

// Throws ConfigError for an unknown key or a malformed value.
void set_value(ExperimentConfig& c, const std::string& key, const std::string& value);

// Applies `key = value` lines on top of `base`. Blank lines and `#` comments are
// skipped. When the text holds `# config:` lines (an output file), only those are read.
ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

// Every entry except jobs and out, which never change results.
std::vector<std::pair<std::string, std::string>> result_pairs(const ExperimentConfig& c);

// Comment block with the version and every result_pairs entry, each line starting with `prefix`.
std::string header_block(const ExperimentConfig& c, const std::string& prefix = "# ");

// Throws ConfigError for empty grids, out-of-range values, or an unknown family.
void validate(const ExperimentConfig& c);

CombSpec make_spec(const ExperimentConfig& c, double alpha);
RegionConstants region_constants(const ExperimentConfig& c);
BoundOptions bound_options(const ExperimentConfig& c);
SimConfig sim_config(const ExperimentConfig& c, double alpha);

// Shortest round-trip text for a double.
std::string format_double(double v);

}  // namespace comb
