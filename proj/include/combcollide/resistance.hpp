#pragma once

// Unit-conductance electrical networks on finite windows of the comb.
//
// For a finite interior set B, FusedNetwork identifies every vertex outside B
// with one grounded node. Its reduced Laplacian L_B (degree on the diagonal,
// -1 per interior edge) is factored once; G = L_B^{-1} is the Green function
// with G(x, y) = g(y) the occupation density of the walk from x killed on
// leaving B.

#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "combcollide/comb_graph.hpp"

namespace comb {

struct ExitProfile {
  Vertex start{};
  std::vector<Vertex> interior;  // sorted
  std::vector<double> g;         // aligned with interior
  std::vector<int> deg;          // aligned with interior
  double resistance_to_boundary = 0.0;
  double expected_exit_time = 0.0;  // sum of g * deg
};

class FusedNetwork {
 public:
  // Throws DomainError for an empty or inadmissible interior.
  FusedNetwork(const CombSpec& spec, std::vector<Vertex> interior);
  ~FusedNetwork();
  FusedNetwork(FusedNetwork&&) noexcept;
  FusedNetwork& operator=(FusedNetwork&&) noexcept;

  const std::vector<Vertex>& interior() const noexcept { return interior_; }
  std::size_t size() const noexcept { return interior_.size(); }
  bool contains(Vertex v) const { return index_.count(v) != 0; }
  int degree_at(std::size_t i) const { return deg_[i]; }

  // Potential from a unit current injected at x and drained at the fused node.
  std::vector<double> green_column(Vertex x) const;

  // R(x, B^c).
  double resistance_to_boundary(Vertex x) const;
  // R_{B^c}(x, y).
  double fused_pair_resistance(Vertex x, Vertex y) const;

  // g(y) = (R(x,B^c) + R(y,B^c) - R_{B^c}(x,y)) / 2, evaluated term by term.
  ExitProfile occupation_density(Vertex x) const;

  // E^v(tau_B) for every interior v, from the non-symmetric system
  // m(v) = 1 + mean of m over neighbours, m = 0 off B.
  std::vector<double> exit_times_direct() const;

 private:
  std::size_t require_index(Vertex v) const;

  struct Factor;
  CombSpec spec_;
  std::vector<Vertex> interior_;
  std::unordered_map<Vertex, std::size_t, VertexHash> index_;
  std::vector<int> deg_;
  std::unique_ptr<Factor> factor_;
};

// Tree identity: the resistance between two vertices is their graph distance.
double pair_resistance(const CombSpec& spec, Vertex u, Vertex v);

// Same quantity from a Laplacian solve on the induced subgraph `window`
// (free boundary), grounded at v. The window must contain the u-v path.
double pair_resistance_solve(const CombSpec& spec, Vertex u, Vertex v, std::span<const Vertex> window);
// Window defaults to ball(u, d(u, v) + 2).
double pair_resistance_solve(const CombSpec& spec, Vertex u, Vertex v);

double resistance_to_boundary(const CombSpec& spec, Vertex x, const std::vector<Vertex>& interior);
double fused_pair_resistance(const CombSpec& spec, Vertex x, Vertex y, const std::vector<Vertex>& interior);
ExitProfile occupation_density(const CombSpec& spec, Vertex x, const std::vector<Vertex>& interior);
double expected_exit_time_direct(const CombSpec& spec, Vertex x, const std::vector<Vertex>& interior);

}  // namespace comb
