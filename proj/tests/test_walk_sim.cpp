#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "combcollide/errors.hpp"
#include "combcollide/exact_kernel.hpp"
#include "combcollide/walk_sim.hpp"

using namespace comb;

namespace {

SimConfig base_config() {
  SimConfig c;
  c.spec = CombSpec::log_comb(1.0);
  c.starts = {{12, 1}, {12, 1}, {12, 1}};
  c.horizon = 40;
  c.replicas = 200;
  c.master_seed = 20240611;
  return c;
}

bool same_record(const RunRecord& a, const RunRecord& b) {
  return a.replica_id == b.replica_id && a.seed == b.seed && a.sigma == b.sigma && a.theta == b.theta &&
         a.theta_walker == b.theta_walker && a.collision_times == b.collision_times &&
         a.last_collision == b.last_collision && a.C == b.C && a.H1 == b.H1 && a.H2 == b.H2 && a.HN == b.HN &&
         a.checkpoint_C == b.checkpoint_C && a.final_positions == b.final_positions;
}

}  // namespace

TEST_CASE("single walker has no collision fields") {
  SimConfig c = base_config();
  c.starts = {{0, 0}};
  c.rc.N = 2;
  c.horizon = 500;
  const auto r = simulate_replica(c, 3);
  CHECK_FALSE(r.sigma.has_value());
  CHECK(r.collision_times.empty());
  CHECK(r.C == 0);
  CHECK(r.H1 + r.H2 + r.HN == 0);
  REQUIRE(r.theta_walker.size() == 1);
  CHECK(r.theta == r.theta_walker[0]);
  CHECK(r.theta.has_value());  // leaving |n| <= 4 within 500 steps is overwhelmingly likely at this seed
}

TEST_CASE("odd distances never collide") {
  SimConfig c = base_config();
  c.starts = {{12, 1}, {13, 1}, {12, 1}};
  for (const auto& r : simulate(c, 1)) {
    CHECK_FALSE(r.sigma.has_value());
    CHECK(r.C == 0);
  }
}

TEST_CASE("reproducibility across workers and order") {
  SimConfig c = base_config();
  c.replicas = 64;
  c.checkpoints = {10, 5, 40, 1000};
  const auto a = simulate(c, 1);
  const auto b = simulate(c, 4);
  REQUIRE(a.size() == b.size());
  std::vector<std::int64_t> seen;
  simulate(c, 3, [&](const RunRecord& r) { seen.push_back(r.replica_id); });
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(same_record(a[i], b[i]));
    CHECK(seen[i] == static_cast<std::int64_t>(i));
  }
  CHECK(same_record(simulate_replica(c, 17), a[17]));
  CHECK(replica_seed(1, 0) != replica_seed(1, 1));
  CHECK(replica_seed(1, 0) != replica_seed(2, 0));
}

TEST_CASE("property: counter consistency and monotonicity") {
  SimConfig c = base_config();
  c.starts = {{10, 0}, {12, 0}, {10, 2}};
  c.rc.N = 6;
  c.horizon = 300;
  c.replicas = 300;
  c.max_collision_times = 1000;
  c.checkpoints = {50, 150, 300};
  SimConfig shorter = c;
  shorter.horizon = 150;
  const auto longer = simulate(c, 2);
  const auto brief = simulate(shorter, 2);
  for (std::size_t i = 0; i < longer.size(); ++i) {
    const auto& r = longer[i];
    CHECK(r.H1 <= r.HN);
    CHECK(r.H2 <= r.HN);
    CHECK(r.HN <= r.C);
    CHECK(r.C >= static_cast<std::int64_t>(r.collision_times.size()) - (r.sigma == 0 ? 1 : 0));
    if (!r.collision_times.empty()) CHECK(r.sigma == r.collision_times.front());
    for (std::int64_t t : r.collision_times) CHECK(t <= c.horizon);
    CHECK(r.checkpoint_C[0] <= r.checkpoint_C[1]);
    CHECK(r.checkpoint_C[1] <= r.checkpoint_C[2]);
    CHECK(r.checkpoint_C[2] == r.C);
    // the shorter run is a prefix of the longer one
    CHECK(brief[i].C == r.checkpoint_C[1]);
    CHECK(brief[i].C <= r.C);
    CHECK(brief[i].H1 <= r.H1);
    CHECK(brief[i].H2 <= r.H2);
    CHECK(brief[i].HN <= r.HN);
    if (r.theta) {
      std::int64_t m = *r.theta;
      for (const auto& t : r.theta_walker) {
        if (t) m = std::min(m, *t);
      }
      CHECK(m == *r.theta);
    }
  }
}

TEST_CASE("coinciding starts: sigma is 0 but counters start at n = 1") {
  SimConfig c = base_config();
  c.horizon = 0;
  const auto r = simulate_replica(c, 0);
  CHECK(r.sigma == std::optional<std::int64_t>(0));
  CHECK(r.C == 0);
  CHECK(r.H1 == 0);
  CHECK(estimate_first_meeting_prob(c).mean == 0.0);
}

TEST_CASE("one-step law matches the kernel") {
  SimConfig c = base_config();
  c.starts = {{12, 0}};
  c.horizon = 1;
  c.replicas = 30000;
  std::map<Vertex, double> freq;
  for (const auto& r : simulate(c, 1)) freq[r.final_positions[0]] += 1.0 / c.replicas;
  CHECK(freq.size() == 3);
  for (const auto& [v, f] : freq) {
    CHECK(std::abs(f - 1.0 / 3.0) <= 4.0 * std::sqrt(2.0 / 9.0 / c.replicas));
  }
}

TEST_CASE("Monte Carlo agrees with exact moments") {
  SimConfig c = base_config();
  c.horizon = 60;
  c.replicas = 40000;
  c.probe_time = 8;
  std::vector<double> h1, h2, hn, probe;
  simulate(c, 2, [&](const RunRecord& r) {
    h1.push_back(static_cast<double>(r.H1));
    h2.push_back(static_cast<double>(r.H2));
    hn.push_back(static_cast<double>(r.HN));
    probe.push_back(r.probe_collision ? 1.0 : 0.0);
  });
  const double e1 = expected_count(c.spec, h1_problem(c.spec, c.rc, c.starts, c.horizon));
  const double e2 = expected_count(c.spec, h2_problem(c.spec, c.rc, c.starts, c.horizon));
  const double en = expected_count(c.spec, hn_problem(c.spec, c.rc, c.starts, c.horizon));
  const double pp = triple_collision_probability(c.spec, c.starts[0], c.starts[1], c.starts[2], 8);
  for (const auto& [mc, exact] : {std::pair{estimate(h1), e1}, std::pair{estimate(h2), e2},
                                  std::pair{estimate(hn), en}, std::pair{estimate(probe), pp}}) {
    CHECK(exact > 0.0);
    CHECK(std::abs(mc.mean - exact) <= 3.0 * mc.std_error);
  }
}

TEST_CASE("estimates and summaries") {
  const auto e = estimate({1.0, 2.0, 3.0, 4.0});
  CHECK(e.mean == doctest::Approx(2.5));
  CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(e.ci95 == doctest::Approx(1.96 * e.std_error));
  CHECK(e.replicas == 4);
  CHECK_THROWS_AS(estimate({1.0}), DomainError);
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({0.0, 10.0}, 0.25) == 2.5);

  const auto s1 = CombSpec::log_comb(1.0);
  CHECK(growth_denominator(s1, 100) == doctest::Approx(std::log(std::log(100.0))));
  const auto s05 = CombSpec::log_comb(0.5);
  CHECK(growth_denominator(s05, 100) == doctest::Approx(std::sqrt(std::log(100.0))));

  SimConfig c = base_config();
  c.starts = {{0, 0}, {0, 0}, {0, 0}};
  c.spec = s05;
  c.replicas = 20;
  CHECK_THROWS_AS(growth_statistic(c, {8, 32}), DomainError);
  const auto rows = growth_statistic(c, {16, 64, 256});
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].statistic.size(); ++j) {
      CHECK(rows[i].statistic[j] * rows[i].denominator <= rows[i + 1].statistic[j] * rows[i + 1].denominator);
    }
  }

  c.starts = {{0, 0}};
  c.replicas = 50;
  const auto ex = exit_time_stats(c, {1, 32}, 10000000);
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].cap == 1);
  for (std::int64_t t : ex[0].theta) CHECK(t <= 2);
  CHECK(ex[1].censored == 0);
  CHECK(ex[1].fraction_above_N4 == 0.0);
  for (std::int64_t t : ex[1].theta) CHECK(t >= 129);  // |n| must reach 129
}
