#pragma once

// Exact moments and laws of collision counters
//
//   H = sum_{n = t_lo}^{t_hi} 1{X^1_n = ... = X^k_n in target, n < theta}
//
// where theta is the first exit of any walker from the killing region. The
// first moment is a sum of products of killed single-walker laws. The second
// moment uses the Markov property at the earlier of two collision times, so it
// also needs only single-walker propagations. The full law needs the joint
// chain and is limited to toy sizes.

#include <cstdint>
#include <optional>
#include <vector>

#include "combcollide/comb_graph.hpp"
#include "combcollide/exact_kernel.hpp"

namespace comb {

// The region constants that define H1, H2 and H(N).
struct RegionConstants {
  Coord N = 16;
  Coord h = 4;
  double eps = 0.3;
  double delta = 0.05;
  double c2 = 0.5;
};

// N^2 log^alpha N, the natural time scale of a strip of half-width N.
double diffusive_scale(const CombSpec& spec, Coord N);
// T1 = floor(c2 (1 - eps) N^2 log^alpha N).
std::int64_t t1(const CombSpec& spec, const RegionConstants& rc);
// T2 = floor(delta N^2 log^alpha N).
std::int64_t t2(const CombSpec& spec, const RegionConstants& rc);
// K0 = floor(16 log^{3 alpha} N).
std::int64_t k0(const CombSpec& spec, Coord N);

// S = {(w, l) in V_hN : N/2 < w <= N, eps L <= l <= 2 eps L}, L = log^alpha(N/2).
// Throws EmptyTargetRegion when no vertex qualifies.
std::vector<Vertex> h1_target(const CombSpec& spec, const RegionConstants& rc);
// V_2N \ V_{N/2}.
std::vector<Vertex> annulus_target(const CombSpec& spec, Coord N);

struct CountProblem {
  std::vector<Vertex> starts;
  std::optional<KillRegion> killed_on;
  std::vector<Vertex> target;  // sorted, non-empty
  std::int64_t t_lo = 1;
  std::int64_t t_hi = 0;
};

// H1 with t_hi = min(T1, horizon) when a horizon is given.
CountProblem h1_problem(const CombSpec& spec, const RegionConstants& rc, std::vector<Vertex> starts,
                        std::optional<std::int64_t> horizon = std::nullopt);
// H2 with t_hi = min(T2, horizon).
CountProblem h2_problem(const CombSpec& spec, const RegionConstants& rc, std::vector<Vertex> starts,
                        std::optional<std::int64_t> horizon = std::nullopt);
// H(N) truncated at t_hi.
CountProblem hn_problem(const CombSpec& spec, const RegionConstants& rc, std::vector<Vertex> starts, std::int64_t t_hi);

// E[H].
double expected_count(const CombSpec& spec, const CountProblem& p);

// E[H1] over the window [t_lo, t_hi].
double expected_H1(const CombSpec& spec, const RegionConstants& rc, std::int64_t t_lo, std::int64_t t_hi,
                   std::vector<Vertex> starts);

struct MomentPair {
  double first = 0.0;
  double second = 0.0;
};

// E[H] and E[H^2]. Throws ResourceLimit when |target| * t_hi * |window| exceeds work_limit.
MomentPair count_moments(const CombSpec& spec, const CountProblem& p, double work_limit = 2e10);

struct CountLaw {
  std::vector<double> pmf;  // P(H = c), c = 0 .. K
  double overflow = 0.0;    // P(H > K)

  double mean() const;
  double second_moment() const;  // requires overflow == 0
  double tail(double threshold) const;  // P(H >= threshold); overflow counts as above any threshold > K
};

// Exact law of H from the joint k-walker chain (k <= 3), truncated at count K.
// Throws ResourceLimit when |W_parity|^k * (K + 2) exceeds state_limit, where W is
// the part of the killing region reachable from the starts by time t_hi.
CountLaw count_law(const CombSpec& spec, const CountProblem& p, int K, double state_limit = 1e8);

}  // namespace comb
