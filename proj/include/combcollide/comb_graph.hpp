#pragma once

// Comb graphs with a Z backbone and truncated vertical teeth.
//
// The graph is infinite and never materialized: every query is answered from
// the CombSpec on demand. Vertex (n, x) sits at backbone coordinate n and height
// x on the tooth rooted at (n, 0); x == 0 is the backbone vertex.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace comb {

using Coord = std::int64_t;

struct Vertex {
  Coord n = 0;
  Coord x = 0;

  friend constexpr auto operator<=>(const Vertex&, const Vertex&) = default;
};

struct VertexHash {
  std::size_t operator()(const Vertex& v) const noexcept {
    auto a = static_cast<std::uint64_t>(v.n) * 0x9e3779b97f4a7c15ULL;
    auto b = static_cast<std::uint64_t>(v.x) + 0x632be59bd9b4e019ULL;
    return static_cast<std::size_t>(a ^ (b + (a << 6) + (a >> 2)));
  }
};

// (n + x) mod 2; flips on every edge.
constexpr int parity(Vertex v) noexcept {
  return static_cast<int>(((v.n + v.x) % 2 + 2) % 2);
}

std::string to_string(Vertex v);

enum class Family { log_comb, poly_comb, custom };

// Parameterization of the tooth-height law.
//   log_comb:  height(n) = floor(log_b(max(|n|, 1))^alpha)
//   poly_comb: height(n) = floor(|n|^alpha)
//   custom:    caller-supplied height function
class CombSpec {
 public:
  using HeightFn = std::function<Coord(Coord)>;

  static CombSpec log_comb(double alpha, double log_base = 0.0);
  static CombSpec poly_comb(double alpha);
  // `symmetric` promises height(n) == height(-n); enables mirror shortcuts.
  static CombSpec custom(HeightFn height, std::string description, bool symmetric = false);
  // Constant tooth height; height 0 gives the integer line.
  static CombSpec uniform(Coord height);

  Family family() const noexcept { return family_; }
  double alpha() const noexcept { return alpha_; }
  // Natural log when not overridden.
  double log_base() const noexcept { return log_base_; }
  bool symmetric() const noexcept { return symmetric_; }

  // log_b(t)^alpha for real t >= 1, the continuous profile behind the heights.
  double log_pow(double t) const;
  // log_b(t)^e for an arbitrary exponent (e.g. the 3*alpha in 16 log^{3 alpha} N).
  double log_pow(double t, double exponent) const;

  Coord tooth_height(Coord n) const;
  std::string describe() const;

 private:
  CombSpec() = default;

  Family family_ = Family::log_comb;
  double alpha_ = 1.0;
  double log_base_ = 0.0;
  bool symmetric_ = true;
  HeightFn custom_;
  std::string description_;
};

inline Coord tooth_height(const CombSpec& spec, Coord n) { return spec.tooth_height(n); }

bool admissible(const CombSpec& spec, Vertex v);
// Throws DomainError when v is not a vertex of the comb.
void require_admissible(const CombSpec& spec, Vertex v);

// Degree in {1, 2, 3}.
int degree(const CombSpec& spec, Vertex v);

// Admissible vertices at distance 1, sorted by (n, x).
std::vector<Vertex> neighbors(const CombSpec& spec, Vertex v);

// Unique tree path length; assumes both endpoints are admissible.
constexpr Coord tree_distance(Vertex u, Vertex v) noexcept {
  if (u.n == v.n) return u.x > v.x ? u.x - v.x : v.x - u.x;
  const Coord dn = u.n > v.n ? u.n - v.n : v.n - u.n;
  return u.x + dn + v.x;
}

Coord distance(const CombSpec& spec, Vertex u, Vertex v);

struct Ball {
  Vertex center;
  Coord radius = 0;
  std::vector<Vertex> members;  // sorted by (n, x)
};

Ball ball(const CombSpec& spec, Vertex center, Coord r);
// |B(center, r)| without enumerating the members.
Coord volume(const CombSpec& spec, Vertex center, Coord r);

// Sum over y = n+1 .. n+r-x of min(height(y), r - x - y + n), for center (n, x)
// with n >= 0 and r >= x. Never exceeds volume(center, r).
Coord volume_witness_lower_bound(const CombSpec& spec, Vertex center, Coord r);

// The vertical strip { (n, x) : |n| <= N }.
struct Strip {
  Coord N = 0;

  constexpr bool contains(Vertex v) const noexcept { return (v.n < 0 ? -v.n : v.n) <= N; }
};

// All vertices of a strip, sorted by (n, x).
std::vector<Vertex> strip_members(const CombSpec& spec, Strip strip);

// Cached tooth heights over a backbone range; falls back to the spec outside it.
// Immutable after construction, so it can be shared between threads.
class HeightTable {
 public:
  HeightTable(const CombSpec& spec, Coord radius);

  Coord operator()(Coord n) const {
    const Coord i = n + radius_;
    if (i >= 0 && i < static_cast<Coord>(heights_.size())) return heights_[static_cast<std::size_t>(i)];
    return spec_.tooth_height(n);
  }

  const CombSpec& spec() const noexcept { return spec_; }
  Coord radius() const noexcept { return radius_; }

 private:
  CombSpec spec_;
  Coord radius_;
  std::vector<Coord> heights_;
};

}  // namespace comb
