#include "combcollide/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "combcollide/errors.hpp"
#include "combcollide/exact_kernel.hpp"
#include "combcollide/moments.hpp"
#include "combcollide/resistance.hpp"
#include "combcollide/walk_sim.hpp"

namespace comb {

namespace {

using json = nlohmann::ordered_json;

// Default phase horizon T when the config leaves horizon at 0.
constexpr std::int64_t kPhaseHorizon = 1000000;

std::filesystem::path out_dir(const ExperimentConfig& c) {
  std::filesystem::path p(c.out);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec || !std::filesystem::is_directory(p)) throw ConfigError("cannot create output directory " + c.out);
  return p;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << body;
}

json config_json(const ExperimentConfig& c) {
  json j;
  j["version"] = kVersion;
  json cfg = json::object();
  for (const auto& [k, v] : result_pairs(c)) cfg[k] = v;
  j["config"] = cfg;
  return j;
}

void write_json(const std::filesystem::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

std::string opt(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : ""; }

json vjson(Vertex v) { return json::array({v.n, v.x}); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json row_json(const GridRow& r) {
  json j;
  j["point"] = r.point;
  j["scale"] = r.scale;
  j["lhs"] = finite_or_null(r.lhs);
  j["rate"] = finite_or_null(r.rate);
  j["rhs"] = finite_or_null(r.rhs);
  j["ratio"] = finite_or_null(r.ratio);
  j["in_constraints"] = r.in_constraints;
  return j;
}

json report_json(const BoundReport& r) {
  json j;
  j["bound_id"] = r.bound_id;
  j["alpha"] = r.spec ? json(r.spec->alpha()) : json(nullptr);
  j["grid"] = r.grid;
  j["orientation"] = to_string(r.orientation);
  j["fitted"] = r.fitted;
  j["explicit_constant"] = r.explicit_constant ? json(*r.explicit_constant) : json(nullptr);
  j["worst_ratio"] = finite_or_null(r.worst_ratio);
  j["fitted_constant"] = finite_or_null(r.fitted_constant);
  json sc = json::array();
  for (const auto& [s, v] : r.scale_constants) sc.push_back(json::array({s, finite_or_null(v)}));
  j["scale_constants"] = sc;
  j["trend_slope"] = r.trend_slope ? finite_or_null(*r.trend_slope) : json(nullptr);
  j["stability"] = r.stability ? finite_or_null(*r.stability) : json(nullptr);
  j["pass"] = r.pass;
  j["empty"] = r.empty;
  j["monte_carlo"] = r.monte_carlo;
  j["note"] = r.note;
  json w = json::array();
  for (const auto& row : r.witnesses) w.push_back(row_json(row));
  j["witnesses"] = w;
  return j;
}

std::string bounds_csv(const ExperimentConfig& c, const std::vector<BoundReport>& reports) {
  std::ostringstream s;
  s << header_block(c) << "bound_id,grid_point,lhs,rhs,ratio\n";
  for (const auto& r : reports) {
    const std::string prefix = r.spec ? "alpha=" + format_double(r.spec->alpha()) + " " : "";
    for (const auto& row : r.rows) {
      std::string point = prefix + row.point;
      std::replace(point.begin(), point.end(), ',', ';');
      s << r.bound_id << "," << point << "," << num(row.lhs) << "," << num(row.rhs) << "," << num(row.ratio) << "\n";
    }
  }
  return s.str();
}

Estimate safe_estimate(const std::vector<double>& v) {
  if (v.size() >= 2) return estimate(v);
  Estimate e;
  e.replicas = static_cast<std::int64_t>(v.size());
  e.mean = v.empty() ? 0.0 : v.front();
  return e;
}

json estimate_json(const Estimate& e) {
  json j;
  j["mean"] = e.mean;
  j["std_error"] = e.std_error;
  j["ci95"] = e.ci95;
  j["replicas"] = e.replicas;
  return j;
}

double median_of(const std::vector<double>& v) { return v.empty() ? 0.0 : quantile(v, 0.5); }

}  // namespace

bool check_start_parity(const ExperimentConfig& c, std::ostream& warn) {
  bool even = true;
  for (std::size_t i = 0; i < c.starts.size(); ++i) {
    for (std::size_t j = i + 1; j < c.starts.size(); ++j) {
      even = even && parity(c.starts[i]) == parity(c.starts[j]);
    }
  }
  if (even) return true;
  if (c.mixed_parity == "reject") throw ConfigError("starts are not pairwise at even distance");
  if (c.mixed_parity == "warn") warn << "warning: starts are not pairwise at even distance; no collision can occur\n";
  return false;
}

int run_graph(const ExperimentConfig& c) {
  const auto dir = out_dir(c);
  const auto spec = make_spec(c, c.alpha);
  std::ostringstream csv;
  csv << header_block(c) << "n,height,volume_to_n\n";
  Coord cumulative = 0;
  for (Coord n = -c.N; n <= c.N; ++n) {
    cumulative += spec.tooth_height(n) + 1;
    csv << n << "," << spec.tooth_height(n) << "," << cumulative << "\n";
  }
  write_file(dir / "heights.csv", csv.str());

  require_admissible(spec, c.x);
  require_admissible(spec, c.y);
  json j = config_json(c);
  j["comb"] = spec.describe();
  j["x"] = vjson(c.x);
  j["degree_x"] = degree(spec, c.x);
  json nb = json::array();
  for (const Vertex& v : neighbors(spec, c.x)) nb.push_back(vjson(v));
  j["neighbors_x"] = nb;
  j["y"] = vjson(c.y);
  j["distance_xy"] = distance(spec, c.x, c.y);
  j["radius"] = c.radius;
  j["ball_volume"] = volume(spec, c.x, c.radius);
  j["strip_N"] = c.N;
  j["strip_size"] = strip_members(spec, Strip{c.N}).size();
  write_json(dir / "graph.json", j);
  return 0;
}

int run_kernel(const ExperimentConfig& c) {
  const auto dir = out_dir(c);
  const auto spec = make_spec(c, c.alpha);
  require_admissible(spec, c.x);
  require_admissible(spec, c.y);
  if (c.n < 0) throw ConfigError("n must be non-negative");
  const auto kill = KillRegion::strip(c.h * c.N);
  DistVector free = DistVector::delta(spec, c.x);
  DistVector killed = DistVector::delta(spec, c.x, kill);
  const double dy = degree(spec, c.y);
  std::ostringstream csv;
  csv << header_block(c) << "n,p,p_killed,survival\n";
  for (std::int64_t t = 0; t <= c.n; ++t) {
    if (t > 0) {
      free.advance(spec);
      killed.advance(spec);
    }
    csv << t << "," << num(free.mass(c.y) / dy) << "," << num(killed.mass(c.y) / dy) << ","
        << num(killed.total_mass()) << "\n";
  }
  write_file(dir / "kernel.csv", csv.str());

  json j = config_json(c);
  const auto kv = kernel(spec, c.x, c.y, c.n);
  j["p"] = kv.value;
  j["p_reverse"] = kernel(spec, c.y, c.x, c.n).value;
  int code = 0;
  if (c.n <= 60) {
    const Rational exact = kernel_exact(spec, c.x, c.y, c.n);
    j["p_exact"] = boost::lexical_cast<std::string>(exact);
    const double err = std::abs(static_cast<double>(exact) - kv.value);
    j["exact_abs_error"] = err;
    if (err > 1e-12) code = 1;
  }
  write_json(dir / "kernel.json", j);
  return code;
}

int run_resist(const ExperimentConfig& c) {
  const auto dir = out_dir(c);
  const auto spec = make_spec(c, c.alpha);
  require_admissible(spec, c.x);
  require_admissible(spec, c.y);
  json j = config_json(c);
  const double tree = pair_resistance(spec, c.x, c.y);
  const double solved = pair_resistance_solve(spec, c.x, c.y);
  j["pair_resistance"] = tree;
  j["pair_resistance_solve"] = solved;
  const auto B = ball(spec, c.x, c.radius).members;
  const auto prof = occupation_density(spec, c.x, B);
  const double direct = expected_exit_time_direct(spec, c.x, B);
  j["radius"] = c.radius;
  j["ball_volume"] = B.size();
  j["resistance_to_boundary"] = prof.resistance_to_boundary;
  j["expected_exit_time"] = prof.expected_exit_time;
  j["expected_exit_time_direct"] = direct;
  j["etu_bound"] = 12.0 * static_cast<double>(c.radius) * static_cast<double>(B.size());
  write_json(dir / "resist.json", j);

  std::ostringstream csv;
  csv << header_block(c) << "n,x,g,deg\n";
  for (std::size_t i = 0; i < prof.interior.size(); ++i) {
    csv << prof.interior[i].n << "," << prof.interior[i].x << "," << num(prof.g[i]) << "," << prof.deg[i] << "\n";
  }
  write_file(dir / "occupation.csv", csv.str());
  const bool ok = std::abs(tree - solved) <= 1e-9 * std::max(1.0, tree) &&
                  std::abs(prof.expected_exit_time - direct) <= 1e-9 * std::max(1.0, direct);
  return ok ? 0 : 1;
}

int run_simulate(const ExperimentConfig& c) {
  const auto dir = out_dir(c);
  check_start_parity(c, std::cerr);
  const SimConfig sc = sim_config(c, c.alpha);
  std::ostringstream csv;
  csv << header_block(c) << "replica_id,sigma,theta,C,H1,H2,HN,seed\n";
  std::vector<double> C, H1, H2, HN, met, exited;
  simulate(sc, c.jobs, [&](const RunRecord& r) {
    csv << r.replica_id << "," << opt(r.sigma) << "," << opt(r.theta) << "," << r.C << "," << r.H1 << "," << r.H2
        << "," << r.HN << "," << r.seed << "\n";
    C.push_back(static_cast<double>(r.C));
    H1.push_back(static_cast<double>(r.H1));
    H2.push_back(static_cast<double>(r.H2));
    HN.push_back(static_cast<double>(r.HN));
    met.push_back(r.H1 >= 1 ? 1.0 : 0.0);
    exited.push_back(r.theta ? 1.0 : 0.0);
  });
  write_file(dir / "records.csv", csv.str());

  json j = config_json(c);
  j["comb"] = sc.spec.describe();
  j["horizon"] = sc.horizon;
  j["T1"] = t1(sc.spec, sc.rc);
  j["T2"] = t2(sc.spec, sc.rc);
  j["replicas"] = sc.replicas;
  j["C"] = estimate_json(safe_estimate(C));
  j["H1"] = estimate_json(safe_estimate(H1));
  j["H2"] = estimate_json(safe_estimate(H2));
  j["HN"] = estimate_json(safe_estimate(HN));
  j["first_meeting_prob"] = estimate_json(safe_estimate(met));
  j["exit_fraction"] = estimate_json(safe_estimate(exited));
  write_json(dir / "summary.json", j);
  return 0;
}

const std::vector<std::string>& bound_ids() {
  static const std::vector<std::string> ids{"hku1",  "hku2", "lower-corollary", "exit-time",   "hk1d",
                                            "PZI",   "lemma21", "hkbound",    "moment-shape"};
  return ids;
}

std::vector<BoundReport> run_bound_checks(const ExperimentConfig& c, double alpha, const std::string& which) {
  if (std::find(bound_ids().begin(), bound_ids().end(), which) == bound_ids().end()) {
    throw ConfigError("unknown bound '" + which + "'");
  }
  const auto spec = make_spec(c, alpha);
  const auto o = bound_options(c);
  if (which == "hku1") return {check_hku1(spec, c.n_grid, o)};
  if (which == "hku2") return check_hku2(spec, c.N_grid, o);
  if (which == "lower-corollary") return check_lower_bound(spec, c.N_grid, o);
  if (which == "exit-time") return check_exit_time_bounds(spec, c.N_grid, c.r_grid, o);
  if (which == "hk1d") return {check_hk1d(c.L_grid, o)};
  if (which == "PZI") return {check_paley_zygmund(default_toy_distributions(c.seed), {0.1, 0.25, 0.5, 0.75, 0.9})};
  if (which == "lemma21") return check_lemma21_and_quadruple(spec, c.lemma21_n_max, c.quad_n_max, o);
  if (which == "hkbound") return {check_hkbound(spec)};
  return check_moment_shape(spec, c.N_grid, o);
}

int run_bounds(const ExperimentConfig& c) {
  const auto dir = out_dir(c);
  std::vector<std::string> selected;
  if (c.bound == "all") {
    selected = bound_ids();
  } else {
    selected = {c.bound};
  }
  std::vector<BoundReport> reports;
  for (const auto& id : selected) {
    // checks that do not depend on the comb run once
    const bool comb_free = id == "hk1d" || id == "PZI";
    const std::vector<double> alphas = comb_free ? std::vector<double>{c.alpha_grid.front()} : c.alpha_grid;
    for (double a : alphas) {
      for (auto& r : run_bound_checks(c, a, id)) reports.push_back(std::move(r));
    }
  }
  json j = config_json(c);
  json arr = json::array();
  bool all_pass = true;
  for (const auto& r : reports) {
    arr.push_back(report_json(r));
    all_pass = all_pass && r.pass;
  }
  j["all_pass"] = all_pass;
  j["reports"] = arr;
  write_json(dir / "bounds_report.json", j);
  write_file(dir / "bounds.csv", bounds_csv(c, reports));
  for (const auto& r : reports) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.bound_id;
    if (r.spec) std::cout << " alpha=" << format_double(r.spec->alpha());
    std::cout << " worst_ratio=" << num(r.worst_ratio) << " fitted=" << num(r.fitted_constant);
    if (r.trend_slope) std::cout << " slope=" << num(*r.trend_slope);
    if (r.empty) std::cout << " (empty grid)";
    std::cout << "\n";
  }
  return all_pass ? 0 : 1;
}

int run_phase(const ExperimentConfig& c) {
  const auto dir = out_dir(c);
  check_start_parity(c, std::cerr);
  const std::int64_t T = c.horizon > 0 ? c.horizon : kPhaseHorizon;
  std::ostringstream csv;
  csv << header_block(c) << "alpha,replica,horizon,collisions,last_collision\n";
  json j = config_json(c);
  j["T"] = T;
  json per_alpha = json::array();
  for (double a : c.alpha_grid) {
    SimConfig sc = sim_config(c, a);
    sc.horizon = 2 * T;
    sc.checkpoints = {T, 2 * T};
    sc.max_collision_times = 0;
    std::vector<double> c1, c2, l1, l2, inc;
    simulate(sc, c.jobs, [&](const RunRecord& r) {
      for (std::size_t k = 0; k < 2; ++k) {
        csv << format_double(a) << "," << r.replica_id << "," << sc.checkpoints[k] << "," << r.checkpoint_C[k] << ","
            << opt(r.checkpoint_last[k]) << "\n";
      }
      c1.push_back(static_cast<double>(r.checkpoint_C[0]));
      c2.push_back(static_cast<double>(r.checkpoint_C[1]));
      inc.push_back(static_cast<double>(r.checkpoint_C[1] - r.checkpoint_C[0]));
      l1.push_back(static_cast<double>(r.checkpoint_last[0].value_or(0)));
      l2.push_back(static_cast<double>(r.checkpoint_last[1].value_or(0)));
    });
    json e;
    e["alpha"] = a;
    e["median_collisions_T"] = median_of(c1);
    e["median_collisions_2T"] = median_of(c2);
    e["median_increment"] = median_of(inc);
    e["median_last_collision_T"] = median_of(l1);
    e["median_last_collision_2T"] = median_of(l2);
    if (a > 1.0) {
      e["last_collision_stable"] = median_of(l1) == median_of(l2);
    } else {
      e["collisions_increase"] = median_of(c2) > median_of(c1);
    }
    per_alpha.push_back(e);
  }
  j["per_alpha"] = per_alpha;
  write_file(dir / "phase.csv", csv.str());
  write_json(dir / "phase_summary.json", j);
  return 0;
}

int run_growth(const ExperimentConfig& c) {
  const auto dir = out_dir(c);
  check_start_parity(c, std::cerr);
  std::ostringstream csv;
  csv << header_block(c) << "alpha,replica,N,C_N,statistic\n";
  json j = config_json(c);
  json per_alpha = json::array();
  std::vector<std::int64_t> grid(c.N_grid.begin(), c.N_grid.end());
  for (double a : c.alpha_grid) {
    if (a > 1.0) continue;  // the growth statement is for alpha <= 1
    const SimConfig sc = sim_config(c, a);
    const auto rows = growth_statistic(sc, grid, c.jobs);
    for (std::int64_t rep = 0; rep < sc.replicas; ++rep) {
      for (const auto& row : rows) {
        const double stat = row.statistic[static_cast<std::size_t>(rep)];
        csv << format_double(a) << "," << rep << "," << row.N << "," << std::llround(stat * row.denominator) << ","
            << num(stat) << "\n";
      }
    }
    json e;
    e["alpha"] = a;
    json per_n = json::array();
    for (const auto& row : rows) {
      json r;
      r["N"] = row.N;
      r["denominator"] = row.denominator;
      r["median"] = row.median;
      r["q25"] = row.q25;
      r["q75"] = row.q75;
      per_n.push_back(r);
    }
    e["rows"] = per_n;
    per_alpha.push_back(e);
  }
  if (per_alpha.empty()) throw ConfigError("growth needs some alpha <= 1 in alpha_grid");
  j["per_alpha"] = per_alpha;
  write_file(dir / "growth.csv", csv.str());
  write_json(dir / "growth_summary.json", j);
  return 0;
}

int run_moments(const ExperimentConfig& c) {
  const auto dir = out_dir(c);
  std::vector<BoundReport> reports;
  for (double a : c.alpha_grid) {
    for (auto& r : check_moment_shape(make_spec(c, a), c.N_grid, bound_options(c))) reports.push_back(std::move(r));
  }
  std::ostringstream csv;
  csv << header_block(c) << "alpha,bound_id,N,lhs,rate,ratio\n";
  json j = config_json(c);
  json arr = json::array();
  bool all_pass = true;
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      csv << format_double(row.alpha) << "," << r.bound_id << "," << row.N << "," << num(row.lhs) << ","
          << num(row.rate) << "," << num(row.ratio) << "\n";
    }
    arr.push_back(report_json(r));
    all_pass = all_pass && r.pass;
  }
  j["all_pass"] = all_pass;
  j["reports"] = arr;
  write_file(dir / "moments.csv", csv.str());
  write_json(dir / "moments_report.json", j);
  return all_pass ? 0 : 1;
}

int run_command(const ExperimentConfig& c) {
  validate(c);
  if (c.command == "graph") return run_graph(c);
  if (c.command == "kernel") return run_kernel(c);
  if (c.command == "resist") return run_resist(c);
  if (c.command == "simulate") return run_simulate(c);
  if (c.command == "bounds") return run_bounds(c);
  if (c.command == "phase") return run_phase(c);
  if (c.command == "growth") return run_growth(c);
  if (c.command == "moments") return run_moments(c);
  throw ConfigError("unknown command '" + c.command + "'");
}

}  // namespace comb
