#pragma once

// Exact propagation of a single walker's law on the comb.
//
// A DistVector stores P^x(X_n = .) (or P^x(X_n = ., tau_B > n) when a killing
// region is attached) on a column-major window that always contains
// ball(start, n). Windows grow lazily; nothing global is ever allocated.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "combcollide/comb_graph.hpp"

namespace comb {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline constexpr Coord kNoCap = std::numeric_limits<Coord>::max() / 4;

// Column range [lo, hi] and a ceiling on stored tooth heights.
struct Bounds {
  Coord lo = 0;
  Coord hi = -1;
  Coord cap = kNoCap;

  bool empty() const noexcept { return hi < lo || cap < 0; }
};

Bounds intersect(const Bounds& a, const Bounds& b);

// Region B on which a walker is killed at its first step outside B.
class KillRegion {
 public:
  enum class Kind { strip, ball, vertex_set };

  static KillRegion strip(Coord N);
  static KillRegion ball(Vertex center, Coord radius);
  static KillRegion vertex_set(std::vector<Vertex> members);

  Kind kind() const noexcept { return kind_; }
  bool contains(Vertex v) const;
  Bounds bounds() const;
  // True when every vertex of the bounding window lies inside the region.
  bool box_is_exact() const noexcept { return kind_ == Kind::strip; }
  std::string describe() const;

  Coord strip_half_width() const noexcept { return strip_N_; }

 private:
  KillRegion() = default;

  Kind kind_ = Kind::strip;
  Coord strip_N_ = 0;
  Vertex center_{};
  Coord radius_ = 0;
  std::shared_ptr<const std::vector<Vertex>> members_;  // sorted
};

// Column-major indexing of all vertices (m, x) with lo <= m <= hi and
// x <= min(height(m), cap).
class ColumnLayout {
 public:
  ColumnLayout(const CombSpec& spec, Bounds bounds, const ColumnLayout* reuse = nullptr);

  Coord lo() const noexcept { return bounds_.lo; }
  Coord hi() const noexcept { return bounds_.hi; }
  Coord cap() const noexcept { return bounds_.cap; }
  const Bounds& bounds() const noexcept { return bounds_; }
  std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }

  Coord height(Coord m) const noexcept { return heights_[col(m)]; }
  Coord stored_height(Coord m) const noexcept { return std::min(heights_[col(m)], bounds_.cap); }
  std::size_t offset(Coord m) const noexcept { return offsets_[col(m)]; }
  bool has_column(Coord m) const noexcept { return m >= bounds_.lo && m <= bounds_.hi; }

  std::optional<std::size_t> index(Vertex v) const noexcept {
    if (!has_column(v.n) || v.x < 0 || v.x > stored_height(v.n)) return std::nullopt;
    return offset(v.n) + static_cast<std::size_t>(v.x);
  }

  int degree(Vertex v) const noexcept {
    const Coord h = height(v.n);
    if (v.x == 0) return h > 0 ? 3 : 2;
    return v.x < h ? 2 : 1;
  }

 private:
  std::size_t col(Coord m) const noexcept { return static_cast<std::size_t>(m - bounds_.lo); }

  Bounds bounds_;
  std::vector<Coord> heights_;
  std::vector<std::size_t> offsets_;  // one past the end per column, prefix form
};

// Masses below this are dropped during propagation (they are far below any
// tolerance used here and would otherwise decay through the subnormal range).
inline constexpr double kMassFloor = 1e-300;

class DistVector {
 public:
  // Forward law of a walker started at `start`: mass(v) = P^start(X_n = v [, tau_B > n]).
  static DistVector delta(const CombSpec& spec, Vertex start, std::optional<KillRegion> killed_on = std::nullopt);
  // Backward (arrival) vector: mass(w) = P^w(X_n = target [, tau_B > n]).
  static DistVector arrival(const CombSpec& spec, Vertex target, std::optional<KillRegion> killed_on = std::nullopt);

  Vertex start() const noexcept { return start_; }
  std::int64_t step_index() const noexcept { return step_; }
  const std::optional<KillRegion>& killed_on() const noexcept { return killed_on_; }

  double mass(Vertex v) const noexcept;
  double total_mass() const noexcept;
  std::size_t support_size() const noexcept;
  std::vector<std::pair<Vertex, double>> support() const;

  // f(Vertex, double mass, int degree) over vertices with non-zero mass.
  template <class F>
  void for_each(F&& f) const {
    if (active_hi_ < active_lo_) return;
    for (Coord m = active_lo_; m <= active_hi_; ++m) {
      const std::size_t base = layout_->offset(m);
      const Coord top = layout_->stored_height(m);
      for (Coord x = 0; x <= top; ++x) {
        const double a = mass_[base + static_cast<std::size_t>(x)];
        if (a != 0.0) f(Vertex{m, x}, a, layout_->degree({m, x}));
      }
    }
  }

  // One step of the simple random walk, in place.
  void advance(const CombSpec& spec);

  // Removes and returns the mass at v (used to make v absorbing).
  double remove_mass(Vertex v) noexcept;

  const ColumnLayout& layout() const noexcept { return *layout_; }
  std::span<const double> masses() const noexcept { return mass_; }

 private:
  DistVector() = default;
  void ensure_window(const CombSpec& spec, std::int64_t steps_ahead);
  Bounds required_bounds(std::int64_t t) const;
  void rebuild(const CombSpec& spec, Bounds bounds);

  Vertex start_{};
  bool backward_ = false;
  std::int64_t step_ = 0;
  std::optional<KillRegion> killed_on_;
  std::shared_ptr<const ColumnLayout> layout_;
  std::shared_ptr<const std::vector<std::uint8_t>> alive_;  // null: whole window alive
  std::vector<double> mass_;
  std::vector<double> scratch_;
  Coord active_lo_ = 0;
  Coord active_hi_ = -1;
};

// Returns the law after one more step; `d` is left untouched.
DistVector step(const CombSpec& spec, const DistVector& d);

// Propagates from `start` and calls on_step(n, dist) for n = 0 .. n_max.
template <class F>
void propagate(const CombSpec& spec, Vertex start, std::int64_t n_max, const std::optional<KillRegion>& killed_on,
               F&& on_step) {
  DistVector d = DistVector::delta(spec, start, killed_on);
  on_step(std::int64_t{0}, static_cast<const DistVector&>(d));
  for (std::int64_t n = 1; n <= n_max; ++n) {
    d.advance(spec);
    on_step(n, static_cast<const DistVector&>(d));
  }
}

struct KernelValue {
  double value = 0.0;  // p_n(x, y) or p^B_n(x, y)
  std::int64_t n = 0;
  Vertex x{};
  Vertex y{};
  std::optional<KillRegion> killed_on;
  double survival_mass = 1.0;  // P^x(tau_B > n); 1 for the free walk
  std::size_t support_size = 0;
};

KernelValue kernel(const CombSpec& spec, Vertex x, Vertex y, std::int64_t n,
                   const std::optional<KillRegion>& killed_on = std::nullopt);

// p_{2k}(x, x) for k = 0 .. floor(n_max / 2), by direct propagation to time 2k.
std::vector<double> on_diagonal_series(const CombSpec& spec, Vertex x, std::int64_t n_max,
                                       const std::optional<KillRegion>& killed_on = std::nullopt);

// Same series through p_{2k}(x, x) = sum_w p_k(x, w)^2 deg(w); only k steps needed.
std::vector<double> on_diagonal_series_halfstep(const CombSpec& spec, Vertex x, std::int64_t k_max,
                                                const std::optional<KillRegion>& killed_on = std::nullopt);

// P(X^1_n = ... = X^k_n [, all alive at n]) for independent walkers.
double k_collision_probability(const CombSpec& spec, std::span<const Vertex> starts, std::int64_t n,
                               const std::optional<KillRegion>& killed_on = std::nullopt);

double triple_collision_probability(const CombSpec& spec, Vertex x, Vertex y, Vertex z, std::int64_t n,
                                    const std::optional<KillRegion>& killed_on = std::nullopt);

// k-fold collision probabilities for n = 0 .. n_max in one lockstep pass.
std::vector<double> collision_probability_series(const CombSpec& spec, std::span<const Vertex> starts,
                                                 std::int64_t n_max,
                                                 const std::optional<KillRegion>& killed_on = std::nullopt);

// f[m] = P^x(tau_{y} = m, tau_B > m), the first-hit profile of y for m = 0 .. n_max.
std::vector<double> first_hit_profile(const CombSpec& spec, Vertex x, Vertex y, std::int64_t n_max,
                                      const std::optional<KillRegion>& killed_on = std::nullopt);

// Walk on {0, ..., L} killed on hitting {0, L}; q^L_n(x, y) with deg(y) = 2 for
// interior y and q = 0 at the endpoints.
double kernel_1d(Coord L, Coord x, Coord y, std::int64_t n);

// Calls on_step(n, q) for n = 0 .. n_max, where q[y] = q^L_n(x, y), y = 0 .. L.
template <class F>
void propagate_1d(Coord L, Coord x, std::int64_t n_max, F&& on_step);

// Exact-arithmetic propagation. Every transition probability is 1/deg with
// deg in {1, 2, 3}, so after t steps all masses are integers over 6^t.
class ExactDistVector {
 public:
  static ExactDistVector delta(const CombSpec& spec, Vertex start, std::optional<KillRegion> killed_on = std::nullopt);

  std::int64_t step_index() const noexcept { return step_; }
  Rational mass(Vertex v) const;
  // Numerator over 6^step_index.
  BigInt scaled_mass(Vertex v) const;
  Rational total_mass() const;
  void advance(const CombSpec& spec);

 private:
  ExactDistVector() = default;

  Vertex start_{};
  std::int64_t step_ = 0;
  std::optional<KillRegion> killed_on_;
  std::shared_ptr<const ColumnLayout> layout_;
  std::vector<std::uint8_t> alive_;
  std::vector<BigInt> mass_;
};

Rational kernel_exact(const CombSpec& spec, Vertex x, Vertex y, std::int64_t n,
                      const std::optional<KillRegion>& killed_on = std::nullopt);

// Entry k is p_{2k}(x, x) for 2k <= n_max.
std::vector<Rational> on_diagonal_series_exact(const CombSpec& spec, Vertex x, std::int64_t n_max,
                                               const std::optional<KillRegion>& killed_on = std::nullopt);

template <class F>
void propagate_1d(Coord L, Coord x, std::int64_t n_max, F&& on_step) {
  const auto size = static_cast<std::size_t>(L + 1);
  std::vector<double> p(size, 0.0), next(size, 0.0), q(size, 0.0);
  if (x > 0 && x < L) p[static_cast<std::size_t>(x)] = 1.0;
  auto emit = [&](std::int64_t n) {
    for (std::size_t y = 1; y + 1 < size; ++y) q[y] = 0.5 * p[y];
    on_step(n, std::span<const double>(q));
  };
  emit(0);
  for (std::int64_t n = 1; n <= n_max; ++n) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t y = 1; y + 1 < size; ++y) {
      const double half = 0.5 * p[y];
      if (half == 0.0) continue;
      if (y - 1 >= 1) next[y - 1] += half;
      if (y + 1 + 1 < size) next[y + 1] += half;
    }
    p.swap(next);
    emit(n);
  }
}

}  // namespace comb
