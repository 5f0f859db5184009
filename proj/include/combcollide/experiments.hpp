#pragma once

// Subcommand drivers. Each one writes its files into config.out and returns the
// process exit code: 0 on success, 1 when a bound or oracle check fails.
// Every CSV starts with the `# config:` header block and every JSON document
// carries the same entries under "config", so outputs can be regenerated.

#include <iosfwd>
#include <string>
#include <vector>

#include "combcollide/config.hpp"
#include "combcollide/estimates.hpp"

namespace comb {

int run_graph(const ExperimentConfig& c);
int run_kernel(const ExperimentConfig& c);
int run_resist(const ExperimentConfig& c);
int run_simulate(const ExperimentConfig& c);
int run_bounds(const ExperimentConfig& c);
int run_phase(const ExperimentConfig& c);
int run_growth(const ExperimentConfig& c);
int run_moments(const ExperimentConfig& c);

// Dispatches on c.command.
int run_command(const ExperimentConfig& c);

// Bound ids accepted by --bound, in report order.
const std::vector<std::string>& bound_ids();

// Runs the selected checks at one alpha. Throws ConfigError for an unknown id.
std::vector<BoundReport> run_bound_checks(const ExperimentConfig& c, double alpha, const std::string& which);

// Applies the mixed_parity policy to the configured starts: returns false when
// some pair of starts is at odd distance (so no collision can ever happen).
bool check_start_parity(const ExperimentConfig& c, std::ostream& warn);

}  // namespace comb
