#pragma once

// Monte Carlo engine for k independent simple random walks on a comb.
//
// Walkers move in lockstep inside one replica; replicas are independent and
// seeded from (master_seed, replica_id) only, so results do not depend on
// scheduling or worker count.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "combcollide/comb_graph.hpp"
#include "combcollide/moments.hpp"

namespace comb {

struct SimConfig {
  CombSpec spec = CombSpec::log_comb(1.0);
  std::vector<Vertex> starts{{0, 0}, {0, 0}, {0, 0}};
  std::int64_t horizon = 0;
  RegionConstants rc;
  std::int64_t replicas = 1;
  std::uint64_t master_seed = 1;
  std::size_t max_collision_times = 64;
  // Times at which the running collision count C and last collision are recorded.
  std::vector<std::int64_t> checkpoints;
  // Optional time at which the event "all walkers coincide" is recorded.
  std::optional<std::int64_t> probe_time;
};

// Default horizon ceil(2 N^2 log^alpha N).
std::int64_t default_horizon(const CombSpec& spec, Coord N);

struct RunRecord {
  std::int64_t replica_id = 0;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> sigma;            // first collision time, may be 0
  std::optional<std::int64_t> theta;            // first exit of any walker from V_hN
  std::vector<std::optional<std::int64_t>> theta_walker;
  std::vector<std::int64_t> collision_times;    // capped at max_collision_times, includes 0
  std::optional<std::int64_t> last_collision;   // last collision time in [1, horizon]
  std::int64_t C = 0;                           // collisions at n = 1 .. horizon
  std::int64_t H1 = 0;
  std::int64_t H2 = 0;
  std::int64_t HN = 0;
  std::vector<std::int64_t> checkpoint_C;
  std::vector<std::optional<std::int64_t>> checkpoint_last;
  bool probe_collision = false;
  std::vector<Vertex> final_positions;
};

// Counter-based replica seed: a splitmix64 mix of both inputs.
std::uint64_t replica_seed(std::uint64_t master_seed, std::int64_t replica_id);

RunRecord simulate_replica(const SimConfig& config, std::int64_t replica_id);

// Runs every replica on `jobs` worker threads. on_record is called on the
// calling thread, in replica order, as soon as each record is available.
std::vector<RunRecord> simulate(const SimConfig& config, unsigned jobs,
                                const std::function<void(const RunRecord&)>& on_record = {});

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t replicas = 0;
  double ci95 = 0.0;  // half-width
};

// Requires at least two samples.
Estimate estimate(const std::vector<double>& samples);

// Fraction of replicas with H1 >= 1.
Estimate estimate_first_meeting_prob(const SimConfig& config, unsigned jobs = 1);

double quantile(std::vector<double> values, double q);

struct GrowthRow {
  std::int64_t N = 0;
  double denominator = 0.0;
  std::vector<double> statistic;  // per replica, C_N / denominator
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

// max(log^{1-alpha} N, log log N, 1e-6).
double growth_denominator(const CombSpec& spec, std::int64_t N);

// One long run per replica, C_N read off at every N in the grid (N >= 16).
std::vector<GrowthRow> growth_statistic(const SimConfig& config, const std::vector<std::int64_t>& N_grid,
                                        unsigned jobs = 1);

struct ExitRow {
  Coord N = 0;
  std::int64_t cap = 0;  // min(N^4, max_steps)
  std::vector<std::int64_t> theta;  // censored at cap
  std::int64_t censored = 0;
  double fraction_above_N4 = 0.0;
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  double median_ratio = 0.0;  // median / (N^2 log^alpha N)
};

// First exit of any walker from V_hN, for each N in the grid.
std::vector<ExitRow> exit_time_stats(const SimConfig& config, const std::vector<Coord>& N_grid,
                                     std::int64_t max_steps, unsigned jobs = 1);

}  // namespace comb
