// Command-line entry point: combcollide <subcommand> [flags].
// Exit codes: 0 success, 1 bound failure or oracle mismatch, 2 usage or config error.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "combcollide/config.hpp"
#include "combcollide/errors.hpp"
#include "combcollide/experiments.hpp"

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

// Registers --name as an override of config key `key`.
void flag(CLI::App& app, Overrides& out, const std::string& name, const std::string& key, const std::string& help) {
  app.add_option_function<std::string>(
      name, [&out, key](const std::string& v) { out.emplace_back(key, v); }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Triple collisions of random walks on comb graphs"};
  app.set_version_flag("--version", std::string(comb::kVersion));
  app.require_subcommand(1);
  app.fallthrough();  // global flags may also follow the subcommand

  Overrides overrides;
  std::string config_file;
  std::string grid_file;
  std::vector<std::string> sets;

  app.add_option("--config", config_file, "flat key = value config file (flags take precedence)");
  flag(app, overrides, "--alpha", "alpha", "tooth-height exponent");
  flag(app, overrides, "--family", "family", "log, poly or custom");
  flag(app, overrides, "--custom-height", "custom_height", "heights for |n| = 0, 1, ... (comma list)");
  flag(app, overrides, "--log-base", "log_base", "logarithm base, 0 for natural");
  flag(app, overrides, "--seed", "seed", "master seed");
  flag(app, overrides, "--jobs", "jobs", "worker threads");
  flag(app, overrides, "--out", "out", "output directory");
  app.add_option("--set", sets, "any config entry as key=value (repeatable)");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"graph", "tooth heights, degrees, balls and distances"},
      {"kernel", "exact transition probabilities p_n(x, y)"},
      {"resist", "resistances and expected exit times"},
      {"simulate", "Monte Carlo collision counts"},
      {"bounds", "numerical checks of the heat kernel and collision inequalities"},
      {"phase", "collision counts at horizons T and 2T across alpha"},
      {"growth", "growth statistic C_N / (log^{1-alpha} N v log log N)"},
      {"moments", "first and second moments of the collision counts"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    subs.push_back(sub);
    if (name == "graph" || name == "kernel" || name == "resist") {
      flag(*sub, overrides, "--x", "x", "vertex n:x");
      flag(*sub, overrides, "--y", "y", "vertex n:x");
    }
    if (name == "kernel") flag(*sub, overrides, "--n", "n", "number of steps");
    if (name == "graph" || name == "resist") flag(*sub, overrides, "--radius", "radius", "ball radius");
    if (name == "graph" || name == "kernel" || name == "simulate") flag(*sub, overrides, "--N", "N", "strip scale N");
    if (name == "simulate" || name == "phase" || name == "growth") {
      flag(*sub, overrides, "--starts", "starts", "walker starts n:x,n:x,...");
      flag(*sub, overrides, "--replicas", "replicas", "number of replicas");
      flag(*sub, overrides, "--horizon", "horizon", "number of steps");
    }
    if (name == "simulate") {
      flag(*sub, overrides, "--h-mult", "h", "exit strip V_hN multiplier h");
      flag(*sub, overrides, "--eps", "eps", "region constant epsilon");
      flag(*sub, overrides, "--delta", "delta", "region constant delta");
      flag(*sub, overrides, "--checkpoints", "checkpoints", "times at which C is recorded");
    }
    if (name == "bounds") {
      flag(*sub, overrides, "--bound", "bound", "bound id or all");
      sub->add_option("--grid-file", grid_file, "config file with grid entries");
    }
    if (name == "bounds" || name == "phase" || name == "growth" || name == "moments") {
      flag(*sub, overrides, "--alpha-grid", "alpha_grid", "comma list of alpha values");
    }
    if (name == "bounds" || name == "growth" || name == "moments") {
      flag(*sub, overrides, "--N-grid", "N_grid", "comma list of N values");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    comb::ExperimentConfig c;
    if (!config_file.empty()) c = comb::load_config_file(config_file, c);
    if (!grid_file.empty()) c = comb::load_config_file(grid_file, c);
    for (const auto& [k, v] : overrides) comb::set_value(c, k, v);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw comb::ConfigError("--set expects key=value, got '" + s + "'");
      comb::set_value(c, s.substr(0, eq), s.substr(eq + 1));
    }
    for (CLI::App* sub : subs) {
      if (sub->parsed()) c.command = sub->get_name();
    }
    return comb::run_command(c);
  } catch (const comb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const comb::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const comb::EmptyTargetRegion& e) {
    std::cerr << "empty target region: " << e.what() << "\n";
    return 2;
  } catch (const comb::ResourceLimit& e) {
    std::cerr << "resource limit: " << e.what() << " (raise work_limit or shrink the grid)\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
