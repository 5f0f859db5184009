#pragma once

// Numerical checks of the heat kernel, exit time and collision inequalities.
//
// Every check evaluates LHS and a rate function over a grid. Bounds with an
// explicit constant compare LHS against constant * rate directly. Bounds with
// an existential constant fit it from the grid (max of LHS / rate for upper
// bounds, min for lower bounds) and are judged by a trend test on the per-scale
// constants: the least-squares slope of log(constant) against log(scale) must
// stay within the tolerance, and on grids with at least four scales the
// constants must agree within the stability factor.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "combcollide/comb_graph.hpp"
#include "combcollide/moments.hpp"

namespace comb {

enum class Orientation { upper, lower };

std::string to_string(Orientation o);

// One evaluated grid point. The parameter fields that matter depend on the bound.
struct GridRow {
  std::string point;
  double scale = 0.0;  // the variable the trend is fitted against
  double lhs = 0.0;
  double rate = 0.0;   // rhs = constant * rate
  double rhs = 0.0;
  double ratio = 0.0;  // lhs / rhs
  bool in_constraints = true;  // false: evaluated for information, not judged

  double alpha = 0.0;
  Coord N = 0;
  std::int64_t n = 0;
  Vertex x{};
  Vertex y{};
  Coord r = 0;
  Coord L = 0;
  double eta = 0.0;
  std::int64_t index = -1;  // toy distribution index for Paley-Zygmund rows
};

struct ToyDistribution {
  std::string name;
  std::vector<double> values;  // non-negative
  std::vector<double> probs;   // normalized exactly before use
};

struct BoundReport {
  std::string bound_id;
  std::string grid;
  Orientation orientation = Orientation::upper;
  bool fitted = true;                       // existential constant fitted from the grid
  std::optional<double> explicit_constant;  // set when the paper gives the constant
  double worst_ratio = 0.0;
  double fitted_constant = 0.0;
  std::vector<std::pair<double, double>> scale_constants;  // (scale, constant)
  std::optional<double> trend_slope;
  std::optional<double> stability;  // max / min of the scale constants
  bool pass = false;
  bool empty = false;
  bool monte_carlo = false;
  std::string note;
  std::vector<GridRow> witnesses;
  std::vector<GridRow> rows;
  std::vector<ToyDistribution> inputs;  // Paley-Zygmund only
  // The comb the rows were evaluated on, so witnesses can be re-evaluated.
  std::optional<CombSpec> spec;
};

struct BoundOptions {
  double trend_tolerance = 0.05;
  double stability_factor = 2.0;
  double min_trend_scale = 0.0;  // scales below this are fitted but not trend-tested
  Coord h = 4;
  double c1 = 0.25;  // lower-corollary time window, in units of N^2 log^alpha N
  double c2 = 0.5;
  double hk1d_eps = 0.25;
  double hk1d_c1 = 0.1;
  double hk1d_c2 = 0.5;
  double work_limit = 2e10;
  RegionConstants rc;  // eps, delta and c2 for the moment checks; N and h are overridden
  std::int64_t mc_replicas = 20000;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  bool keep_rows = true;
};

struct Judging {
  bool trend = false;      // judge the per-scale trend slope
  bool stability = false;  // judge the per-scale spread (needs >= 4 scales)
  double min_trend_scale = 0.0;
};

// Fills constants, ratios, witnesses and the verdict of `report` from rows holding lhs and rate.
void judge(BoundReport& report, std::vector<GridRow> rows, const BoundOptions& o, const Judging& j);

// sup_{x in B(0, n)} p_{2 floor(n/2)}(x, x) <= C / (n^{1/2} log^{alpha/2} n), log guarded below by log 2.
BoundReport check_hku1(const CombSpec& spec, const std::vector<std::int64_t>& n_grid, const BoundOptions& o = {});

// Both regimes for x, y in V_N \ V_{N/4}: n < K0 against n^{-1/2}, n >= K0 against
// n^{-1/2} log^{-alpha/2} N. The off-diagonal kernel is dominated through
// Cauchy-Schwarz, so the diagonal is evaluated on a vertex sample per N.
std::vector<BoundReport> check_hku2(const CombSpec& spec, const std::vector<Coord>& N_grid, const BoundOptions& o = {});

// Killed kernel on V_hN over the window [c1, c2] N^2 log^alpha N against 1 / (N log^alpha N),
// reported separately for y on the backbone and y on a tooth top.
std::vector<BoundReport> check_lower_bound(const CombSpec& spec, const std::vector<Coord>& N_grid,
                                           const BoundOptions& o = {});

// Returns the 12 r V upper bound, the r^2 log^alpha N / 2048 lower bound at the
// center, and the survival probability at t = r^2 log^alpha N / 4096.
std::vector<BoundReport> check_exit_time_bounds(const CombSpec& spec, const std::vector<Coord>& N_grid,
                                                const std::vector<Coord>& r_grid, const BoundOptions& o = {});

// q^L_n(x, y) sqrt(n) bounded below for x in [eps L, (1 - eps) L], n <= c1 L^2, |x - y| <= c2 sqrt(n).
BoundReport check_hk1d(const std::vector<Coord>& L_grid, const BoundOptions& o = {});

// P(X >= eta E[X]) >= (1 - eta)^2 E[X]^2 / E[X^2], evaluated in exact rational arithmetic.
BoundReport check_paley_zygmund(const std::vector<ToyDistribution>& dists, const std::vector<double>& etas);

// The 50 toy distributions used by default, including exact H1 and H2 laws at N = 16.
std::vector<ToyDistribution> default_toy_distributions(std::uint64_t seed = 7);

// Triple collision probability from the origin against 9 sup p^2 for n <= n_max,
// and the quadruple collision probability against n^{-3/2} for n <= quad_n_max.
std::vector<BoundReport> check_lemma21_and_quadruple(const CombSpec& spec, std::int64_t n_max,
                                                     std::int64_t quad_n_max = 1000, const BoundOptions& o = {});

// p_{2 floor(n/2)}(x, x) <= 4r / floor(n/2) + 2 / V(x, r) for x in B(0, radius),
// 2 <= n <= n_max, 1 <= r <= r_max. The exact_points grid points closest to
// equality are rechecked in rational arithmetic.
BoundReport check_hkbound(const CombSpec& spec, Coord radius = 20, std::int64_t n_max = 60, Coord r_max = 30,
                          std::size_t exact_points = 1000);

// E[H1] log^alpha N bounded below, E[H1^2] / (E[H1] D) bounded above, and the
// same for H2 started from a point of S, with D = log log N + log^{1-alpha} N.
// Falls back to Monte Carlo when the exact computation exceeds the work limit.
// The tail P(H2 >= c D) always comes from simulation.
std::vector<BoundReport> check_moment_shape(const CombSpec& spec, const std::vector<Coord>& N_grid,
                                            const BoundOptions& o = {});

// Recomputes a witness row through an independent code path and returns its ratio.
double reevaluate(const BoundReport& report, const GridRow& row);

// Least-squares slope of log(value) against log(scale).
double loglog_slope(const std::vector<std::pair<double, double>>& points);

}  // namespace comb
