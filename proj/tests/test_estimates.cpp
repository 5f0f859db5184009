#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "combcollide/errors.hpp"
#include "combcollide/estimates.hpp"
#include "combcollide/exact_kernel.hpp"
#include "combcollide/resistance.hpp"

using namespace comb;

namespace {

void check_witnesses(const BoundReport& rep) {
  REQUIRE_FALSE(rep.witnesses.empty());
  CHECK(std::abs(reevaluate(rep, rep.witnesses.front()) - rep.worst_ratio) <= 1e-10 * std::max(1.0, rep.worst_ratio));
  for (const auto& w : rep.witnesses) CHECK(std::abs(reevaluate(rep, w) - w.ratio) <= 1e-10 * std::max(1.0, w.ratio));
}

void check_orientation(const BoundReport& rep) {
  if (rep.empty || !rep.pass) return;
  if (rep.orientation == Orientation::upper) {
    CHECK(rep.worst_ratio <= 1.0 + 1e-12);
  } else {
    CHECK(rep.worst_ratio >= 1.0 - 1e-12);
  }
}

}  // namespace

TEST_CASE("log-log slope") {
  CHECK(loglog_slope({{1.0, 3.0}, {2.0, 6.0}, {4.0, 12.0}}) == doctest::Approx(1.0));
  CHECK(loglog_slope({{2.0, 5.0}, {8.0, 5.0}}) == doctest::Approx(0.0));
  CHECK(std::isnan(loglog_slope({{2.0, 5.0}})));
}

TEST_CASE("one-dimensional kernel") {
  CHECK(kernel_1d(4, 2, 2, 2) * std::sqrt(2.0) == doctest::Approx(std::sqrt(2.0) / 4.0).epsilon(1e-15));
  CHECK(kernel_1d(4, 2, 3, 2) == 0.0);  // wrong parity

  // exit time from the center of a radius-m interval is (m + 1)^2
  const auto line = CombSpec::uniform(0);
  for (Coord m : {1, 2, 7, 30, 100}) {
    const auto B = ball(line, {0, 0}, m).members;
    CHECK(std::abs(expected_exit_time_direct(line, {0, 0}, B) - static_cast<double>((m + 1) * (m + 1))) <=
          1e-9 * static_cast<double>((m + 1) * (m + 1)));
  }

  BoundOptions o;
  const auto rep = check_hk1d({32, 64}, o);
  CHECK(rep.bound_id == "hk1d");
  CHECK(rep.pass);
  CHECK(rep.fitted_constant > 0.0);
  REQUIRE(rep.scale_constants.size() == 2);
  CHECK(rep.stability.value() <= 2.0);
  for (const auto& r : rep.rows) {
    const Coord gap = std::abs(r.x.n - r.y.n);
    CHECK((gap + r.n) % 2 == 0);
    CHECK(static_cast<double>(gap) <= std::sqrt(static_cast<double>(r.n)) + 1e-9);
  }
  check_witnesses(rep);
}

TEST_CASE("Paley-Zygmund on known distributions") {
  const std::vector<double> etas{0.1, 0.5, 0.9};
  const auto rep = check_paley_zygmund({{"constant", {3.0}, {1.0}}, {"bernoulli", {0.0, 1.0}, {0.7, 0.3}}}, etas);
  CHECK(rep.pass);
  REQUIRE(rep.rows.size() == 6);
  for (std::size_t i = 0; i < 3; ++i) {
    const double eta = etas[i];
    CHECK(rep.rows[i].lhs == 1.0);
    CHECK(rep.rows[i].rate == doctest::Approx((1 - eta) * (1 - eta)));
    CHECK(rep.rows[3 + i].lhs == doctest::Approx(0.3));
    CHECK(rep.rows[3 + i].rate == doctest::Approx((1 - eta) * (1 - eta) * 0.3));
  }
  check_witnesses(rep);
  CHECK_THROWS_AS(check_paley_zygmund({{"bad", {1.0}, {1.0}}}, {1.0}), DomainError);
  CHECK_THROWS_AS(check_paley_zygmund({{"neg", {-1.0}, {1.0}}}, {0.5}), DomainError);

  const auto toys = default_toy_distributions();
  CHECK(toys.size() == 50);
  const auto all = check_paley_zygmund(toys, {0.1, 0.25, 0.5, 0.75, 0.9});
  CHECK(all.pass);
  CHECK(all.worst_ratio >= 1.0);
}

TEST_CASE("hku1 and lemma 2.1 at small n") {
  const auto s = CombSpec::log_comb(1.0);
  const auto rep = check_hku1(s, {2, 8, 16, 32, 64});
  CHECK(rep.pass);
  CHECK(std::isfinite(rep.fitted_constant));
  CHECK(rep.trend_slope.value() <= 0.05);
  check_witnesses(rep);
  check_orientation(rep);
  CHECK_THROWS_AS(check_hku1(s, {1}), DomainError);

  const auto l = check_lemma21_and_quadruple(s, 24, 60);
  REQUIRE(l.size() == 2);
  CHECK(l[0].bound_id == "lemma21");
  CHECK(l[0].pass);
  CHECK(l[0].worst_ratio <= 1.0);
  check_witnesses(l[0]);
  check_witnesses(l[1]);
}

TEST_CASE("hkbound holds with exact rechecks") {
  const auto s = CombSpec::log_comb(1.0);
  const auto rep = check_hkbound(s, 4, 20, 10, 30);
  CHECK(rep.pass);
  CHECK(rep.worst_ratio <= 1.0);
  CHECK(rep.note.find("0 disagreements") != std::string::npos);
  check_witnesses(rep);
}

TEST_CASE("exit-time bounds") {
  const auto s = CombSpec::log_comb(1.0);
  const auto reps = check_exit_time_bounds(s, {16}, {2, 4, 8});
  REQUIRE(reps.size() == 3);
  CHECK(reps[0].bound_id == "etu");
  CHECK(reps[0].pass);
  CHECK(reps[0].worst_ratio <= 1.0);
  check_witnesses(reps[0]);
  // r >= 256 log 16 cannot fit inside V_{4N}
  CHECK(reps[1].bound_id == "exit-lower");
  CHECK(reps[1].empty);
  CHECK(reps[1].pass);
  CHECK(reps[1].note.find("constraint-empty") != std::string::npos);
  CHECK(reps[2].fitted_constant > 0.0);
  check_witnesses(reps[2]);
}

TEST_CASE("hku2 and the killed lower bound") {
  const auto s = CombSpec::log_comb(1.0);
  const auto h = check_hku2(s, {16, 32});
  REQUIRE(h.size() == 2);
  for (const auto& r : h) {
    CHECK(std::isfinite(r.fitted_constant));
    check_orientation(r);
    check_witnesses(r);
  }
  const auto lb = check_lower_bound(s, {16, 32});
  REQUIRE(lb.size() == 2);
  for (const auto& r : lb) {
    CHECK(r.fitted_constant > 0.0);
    check_orientation(r);
    check_witnesses(r);
    for (const auto& row : r.rows) CHECK((parity(row.x) + parity(row.y) + row.n) % 2 == 0);
  }
  BoundOptions tiny;
  tiny.work_limit = 10.0;
  CHECK_THROWS_AS(check_lower_bound(s, {16}, tiny), ResourceLimit);
}

TEST_CASE("property: reports never pass on the wrong side") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    for (Orientation o : {Orientation::upper, Orientation::lower}) {
      BoundReport rep;
      rep.orientation = o;
      if (trial % 2 == 0) {
        rep.fitted = false;
        rep.explicit_constant = u(rng);
      }
      std::vector<GridRow> rows;
      for (int i = 0; i < 6; ++i) {
        GridRow r;
        r.scale = 1.0 + i % 3;
        r.lhs = u(rng);
        r.rate = u(rng);
        rows.push_back(r);
      }
      judge(rep, rows, BoundOptions{}, Judging{});
      CHECK(rep.witnesses.front().ratio == rep.worst_ratio);
      if (rep.pass) {
        CHECK((o == Orientation::upper ? rep.worst_ratio <= 1.0 + 1e-12 : rep.worst_ratio >= 1.0 - 1e-12));
      } else {
        CHECK(rep.explicit_constant.has_value());  // a fitted constant is tight by construction
      }
      for (const auto& r : rep.rows) {
        CHECK((o == Orientation::upper ? r.ratio <= rep.worst_ratio : r.ratio >= rep.worst_ratio));
      }
    }
  }
  // a rising trend fails an upper bound even though the fitted constant covers the grid
  BoundReport rising;
  std::vector<GridRow> rows;
  for (double N : {16.0, 32.0, 64.0, 128.0}) {
    GridRow r;
    r.scale = N;
    r.lhs = N;
    r.rate = 1.0;
    rows.push_back(r);
  }
  judge(rising, rows, BoundOptions{}, Judging{true, true, 0.0});
  CHECK(rising.worst_ratio == doctest::Approx(1.0));
  CHECK(rising.trend_slope.value() == doctest::Approx(1.0));
  CHECK_FALSE(rising.pass);
  // the same rows as a lower bound pass: a rising constant is harmless there
  BoundReport lower;
  lower.orientation = Orientation::lower;
  judge(lower, rows, BoundOptions{}, Judging{true, false, 0.0});
  CHECK(lower.pass);
}

TEST_CASE("reproducible reports") {
  const auto s = CombSpec::log_comb(0.5);
  const auto a = check_hku1(s, {4, 16, 32});
  const auto b = check_hku1(s, {4, 16, 32});
  CHECK(a.worst_ratio == b.worst_ratio);
  CHECK(a.witnesses.front().point == b.witnesses.front().point);
}
