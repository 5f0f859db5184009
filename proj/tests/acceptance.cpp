// Acceptance run: one PASS/FAIL line per criterion, exit code 1 when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "combcollide/comb_graph.hpp"
#include "combcollide/config.hpp"
#include "combcollide/estimates.hpp"
#include "combcollide/exact_kernel.hpp"
#include "combcollide/experiments.hpp"
#include "combcollide/moments.hpp"
#include "combcollide/resistance.hpp"
#include "combcollide/walk_sim.hpp"

using namespace comb;

namespace {

const std::vector<double> kAlphas{0.5, 1.0, 2.0};

struct Outcome {
  bool pass = true;
  std::string detail;
};

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// kernel table p_n(x, y) for x, y in `w` and n <= n_max, indexed [n][i][j]
using Table = std::vector<std::vector<std::vector<double>>>;

Table kernel_table(const CombSpec& s, const std::vector<Vertex>& w, std::int64_t n_max) {
  Table t(static_cast<std::size_t>(n_max + 1), std::vector<std::vector<double>>(w.size(), std::vector<double>(w.size())));
  for (std::size_t i = 0; i < w.size(); ++i) {
    propagate(s, w[i], n_max, std::nullopt, [&](std::int64_t n, const DistVector& d) {
      for (std::size_t j = 0; j < w.size(); ++j) {
        t[static_cast<std::size_t>(n)][i][j] = d.mass(w[j]) / degree(s, w[j]);
      }
    });
  }
  return t;
}

Outcome ac1() {
  Outcome o;
  double sym = 0.0, ck = 0.0, mono = 0.0;
  std::int64_t parity_bad = 0;
  std::mt19937_64 rng(11);
  for (double a : kAlphas) {
    const auto s = CombSpec::log_comb(a);
    const auto w = ball(s, {0, 0}, 30).members;
    const auto t = kernel_table(s, w, 30);
    for (std::size_t n = 0; n <= 30; ++n) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = 0; j < w.size(); ++j) {
          const double p = t[n][i][j];
          sym = std::max(sym, std::abs(p - t[n][j][i]));
          if ((static_cast<int>(n) + parity(w[i]) + parity(w[j])) % 2 != 0 && p != 0.0) ++parity_bad;
        }
      }
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (std::size_t n = 2; n <= 30; n += 2) mono = std::max(mono, t[n][i][i] - t[n - 2][i][i]);
    }
    // Chapman-Kolmogorov through full forward and arrival vectors, every split n + m <= 30
    std::uniform_int_distribution<std::size_t> pick(0, w.size() - 1);
    for (int trial = 0; trial < 12; ++trial) {
      const std::size_t i = pick(rng), j = pick(rng);
      std::vector<DistVector> fwd{DistVector::delta(s, w[i])};
      std::vector<DistVector> back{DistVector::arrival(s, w[j])};
      for (int k = 1; k <= 30; ++k) {
        fwd.push_back(step(s, fwd.back()));
        back.push_back(step(s, back.back()));
      }
      for (std::size_t n = 0; n <= 30; ++n) {
        for (std::size_t m = 0; n + m <= 30; ++m) {
          double sum = 0.0;
          fwd[n].for_each([&](Vertex v, double mass, int) { sum += mass * back[m].mass(v); });
          sum /= degree(s, w[j]);
          ck = std::max(ck, std::abs(sum - t[n + m][i][j]));
        }
      }
    }
  }
  o.pass = sym <= 1e-12 && ck <= 1e-12 && mono <= 1e-14 && parity_bad == 0;
  o.detail = "max asymmetry " + num(sym) + ", CK residual " + num(ck) + ", max diagonal increase " + num(mono) +
             ", parity violations " + std::to_string(parity_bad);
  return o;
}

// lemma21 (AC2) and quadruple (AC11) come out of the same call
std::vector<std::vector<BoundReport>> lemma_reports;

Outcome ac2() {
  Outcome o;
  for (double a : kAlphas) {
    lemma_reports.push_back(check_lemma21_and_quadruple(CombSpec::log_comb(a), 60, 1000));
    const auto& r = lemma_reports.back().front();
    o.pass = o.pass && r.pass;
    o.detail += "alpha " + num(a) + ": worst " + num(r.worst_ratio) + " (" + r.note + "); ";
  }
  return o;
}

Outcome ac3() {
  Outcome o;
  for (double a : kAlphas) {
    const auto r = check_hkbound(CombSpec::log_comb(a), 20, 60, 30, 1000);
    o.pass = o.pass && r.pass;  // a disagreement with the rational recheck fails the report
    o.detail += "alpha " + num(a) + ": worst " + num(r.worst_ratio) + " (" + r.note + "); ";
  }
  return o;
}

Outcome ac4() {
  std::mt19937_64 rng(4);
  double err = 0.0;
  for (double a : kAlphas) {
    const auto s = CombSpec::log_comb(a);
    auto random_vertex = [&] {
      const Coord n = std::uniform_int_distribution<Coord>(-200, 200)(rng);
      return Vertex{n, std::uniform_int_distribution<Coord>(0, s.tooth_height(n))(rng)};
    };
    for (int k = 0; k < 200; ++k) {
      const Vertex u = random_vertex(), v = random_vertex();
      err = std::max(err, std::abs(pair_resistance_solve(s, u, v) - static_cast<double>(distance(s, u, v))));
    }
  }
  return {err <= 1e-9, "600 pairs, max |R - d| = " + num(err)};
}

Outcome ac5() {
  Outcome o;
  std::mt19937_64 rng(5);
  double occ = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto s = CombSpec::log_comb(kAlphas[static_cast<std::size_t>(k) % kAlphas.size()]);
    const Coord n = std::uniform_int_distribution<Coord>(-100, 100)(rng);
    const Coord x = std::uniform_int_distribution<Coord>(0, s.tooth_height(n))(rng);
    const Coord r = std::uniform_int_distribution<Coord>(std::max<Coord>(1, x), 15)(rng);
    const auto b = ball(s, {n, x}, r).members;
    occ = std::max(occ, std::abs(occupation_density(s, {n, x}, b).expected_exit_time -
                                 expected_exit_time_direct(s, {n, x}, b)));
  }
  const auto line = CombSpec::uniform(0);
  double line_err = 0.0;
  for (Coord m = 1; m <= 100; ++m) {
    std::vector<Vertex> interval;
    for (Coord j = -m; j <= m; ++j) interval.push_back({j, 0});
    const double want = static_cast<double>((m + 1) * (m + 1));
    line_err = std::max(line_err, std::abs(occupation_density(line, {0, 0}, interval).expected_exit_time - want) / want);
  }
  bool etu = true;
  double etu_worst = 0.0;
  for (double a : kAlphas) {
    for (const auto& r : check_exit_time_bounds(CombSpec::log_comb(a), {16, 32, 64, 128}, {4, 8, 16, 32})) {
      if (r.bound_id != "etu") continue;
      etu = etu && r.pass;
      etu_worst = std::max(etu_worst, r.worst_ratio);
    }
  }
  o.pass = occ <= 1e-9 && line_err <= 1e-12 && etu;
  o.detail = "20 windows max |sum g deg - direct| = " + num(occ) + ", line (m+1)^2 max rel err = " + num(line_err) +
             ", etu worst E tau / 12rV = " + num(etu_worst);
  return o;
}

Outcome ac6() {
  const auto r = check_hk1d({32, 64, 128, 256});
  const bool ok = r.pass && r.fitted_constant > 0.0 && r.stability && *r.stability <= 2.0;
  return {ok, "c3 = " + num(r.fitted_constant) + ", spread " + num(r.stability.value_or(-1)) + ", slope " +
                  num(r.trend_slope.value_or(0))};
}

Outcome ac7() {
  SimConfig c;
  c.spec = CombSpec::log_comb(1.0);
  c.rc.N = 16;
  c.rc.h = 4;
  c.horizon = 200;
  c.replicas = 100000;
  c.master_seed = 20240611;
  c.max_collision_times = 0;
  const std::int64_t probe = 40;
  c.probe_time = probe;
  std::vector<double> h1, hit;
  simulate(c, workers(), [&](const RunRecord& r) {
    h1.push_back(static_cast<double>(r.H1));
    hit.push_back(r.probe_collision ? 1.0 : 0.0);
  });
  const double e1 = expected_count(c.spec, h1_problem(c.spec, c.rc, c.starts, c.horizon));
  const double ep = triple_collision_probability(c.spec, c.starts[0], c.starts[1], c.starts[2], probe);
  const auto m1 = estimate(h1), mp = estimate(hit);
  const double z1 = std::abs(m1.mean - e1) / m1.std_error, zp = std::abs(mp.mean - ep) / mp.std_error;
  return {z1 <= 3.0 && zp <= 3.0, "E[H1] exact " + num(e1) + " vs MC " + num(m1.mean) + " (" + num(z1) +
                                      " SE); P(triple at n=40) exact " + num(ep) + " vs MC " + num(mp.mean) + " (" +
                                      num(zp) + " SE)"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome ac8() {
  const auto root = std::filesystem::temp_directory_path() / "combcollide_acceptance_ac8";
  std::filesystem::remove_all(root);
  ExperimentConfig c;
  c.command = "simulate";
  c.seed = 777;
  c.replicas = 300;
  c.horizon = 2000;
  std::string files[2];
  const unsigned jobs[2] = {1, 8};
  for (int k = 0; k < 2; ++k) {
    c.jobs = jobs[k];
    c.out = (root / ("jobs" + std::to_string(jobs[k]))).string();
    if (run_command(c) != 0) return {false, "simulate returned non-zero"};
    files[k] = slurp(std::filesystem::path(c.out) / "records.csv");
  }
  std::filesystem::remove_all(root);
  const bool same = !files[0].empty() && files[0] == files[1];
  return {same, "records.csv " + std::to_string(files[0].size()) + " bytes, " +
                    (same ? "identical" : "different") + " for --jobs 1 and --jobs 8"};
}

Outcome ac9() {
  Outcome o;
  BoundOptions opt;
  opt.jobs = workers();
  const std::vector<Coord> Ns{16, 32, 64, 128};
  int total = 0;
  std::vector<std::string> failed, skipped;
  auto take = [&](const BoundReport& r, double a) {
    if (r.empty) {
      skipped.push_back(r.bound_id + "@" + num(a) + "(" + r.note + ")");
      return;
    }
    ++total;
    if (!r.pass) {
      failed.push_back(r.bound_id + "@" + num(a) + "(slope " + num(r.trend_slope.value_or(0)) + ", spread " +
                       num(r.stability.value_or(0)) + (r.note.empty() ? "" : ", " + r.note) + ")");
    }
  };
  for (double a : {0.5, 1.0, 1.5, 2.0}) {
    const auto s = CombSpec::log_comb(a);
    auto guarded = [&](const std::string& id, const std::function<void()>& f) {
      try {
        f();
      } catch (const std::exception& e) {
        ++total;
        failed.push_back(id + "@" + num(a) + "(" + e.what() + ")");
      }
    };
    guarded("hku1", [&] { take(check_hku1(s, {16, 32, 64, 128}, opt), a); });
    guarded("hku2", [&] {
      for (const auto& r : check_hku2(s, Ns, opt)) take(r, a);
    });
    guarded("lower-corollary", [&] {
      for (const auto& r : check_lower_bound(s, Ns, opt)) take(r, a);
    });
    guarded("exit-time", [&] {
      for (const auto& r : check_exit_time_bounds(s, Ns, {4, 8, 16, 32}, opt)) take(r, a);
    });
  }
  take(check_hk1d({32, 64, 128, 256}, opt), 0);
  o.pass = failed.empty();
  o.detail = std::to_string(total - static_cast<int>(failed.size())) + "/" + std::to_string(total) + " reports pass";
  for (const auto& f : skipped) o.detail += "; no judged rows " + f;
  for (const auto& f : failed) o.detail += "; FAIL " + f;
  return o;
}

Outcome ac10() {
  Outcome o;
  const std::int64_t T = 1000000;
  for (double a : {2.0, 0.5}) {
    SimConfig c;
    c.spec = CombSpec::log_comb(a);
    c.horizon = 2 * T;
    c.checkpoints = {T, 2 * T};
    c.replicas = 200;
    c.master_seed = 20240611;
    c.max_collision_times = 0;
    std::vector<double> at_t, at_2t;
    simulate(c, workers(), [&](const RunRecord& r) {
      at_t.push_back(static_cast<double>(r.checkpoint_C[0]));
      at_2t.push_back(static_cast<double>(r.checkpoint_C[1]));
    });
    const double m1 = quantile(at_t, 0.5), m2 = quantile(at_2t, 0.5);
    const bool ok = a > 1.0 ? m2 - m1 <= 1.0 : m2 - m1 >= 5.0;
    o.pass = o.pass && ok;
    o.detail += "alpha " + num(a) + ": median C(T) " + num(m1) + ", C(2T) " + num(m2) + ", increase " + num(m2 - m1) +
                (a > 1.0 ? " (need <= 1)" : " (need >= 5)") + "; ";
  }
  return o;
}

Outcome ac11() {
  Outcome o;
  for (std::size_t k = 0; k < lemma_reports.size(); ++k) {
    for (const auto& r : lemma_reports[k]) {
      if (r.bound_id != "quadruple") continue;
      o.pass = o.pass && r.pass;
      o.detail += "alpha " + num(kAlphas[k]) + ": C = " + num(r.fitted_constant) + " (" + r.note + "); ";
    }
  }
  if (lemma_reports.empty()) return {false, "AC2 did not run"};
  return o;
}

Outcome ac12() {
  const auto toys = default_toy_distributions();
  const auto r = check_paley_zygmund(toys, {0.1, 0.25, 0.5, 0.75, 0.9});
  return {r.pass && toys.size() == 50,
          std::to_string(toys.size()) + " distributions, min P / PZ bound = " + num(r.worst_ratio) + " (" + r.note + ")"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 kernel exactness", ac1},          {"AC2 triple vs 9 sup p^2", ac2},
      {"AC3 hkbound with exact recheck", ac3}, {"AC4 resistance equals distance", ac4},
      {"AC5 exit-time identities", ac5},      {"AC6 1D kernel lower bound", ac6},
      {"AC7 Monte Carlo vs exact", ac7},      {"AC8 determinism across jobs", ac8},
      {"AC9 constant stability", ac9},        {"AC10 phase-transition trend", ac10},
      {"AC11 quadruple finiteness", ac11},    {"AC12 Paley-Zygmund", ac12},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " [" << num(secs) << " s] " << o.detail << std::endl;
  }
  std::cout << (12 - failures) << "/12 criteria pass" << std::endl;
  return failures == 0 ? 0 : 1;
}
