#include "combcollide/resistance.hpp"

#include <algorithm>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "combcollide/errors.hpp"

namespace comb {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

}  // namespace

struct FusedNetwork::Factor {
  SparseMatrix laplacian;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
};

FusedNetwork::FusedNetwork(const CombSpec& spec, std::vector<Vertex> interior) : spec_(spec) {
  std::sort(interior.begin(), interior.end());
  interior.erase(std::unique(interior.begin(), interior.end()), interior.end());
  if (interior.empty()) throw DomainError("fused network needs a non-empty interior");
  interior_ = std::move(interior);
  deg_.reserve(interior_.size());
  for (std::size_t i = 0; i < interior_.size(); ++i) {
    index_.emplace(interior_[i], i);
    deg_.push_back(degree(spec_, interior_[i]));
  }

  // Every finite interior of an infinite connected graph touches its complement,
  // so L_B is strictly diagonally dominant on at least one row per component
  // and non-singular.
  std::vector<Triplet> entries;
  entries.reserve(interior_.size() * 3);
  for (std::size_t i = 0; i < interior_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    entries.emplace_back(ii, ii, static_cast<double>(deg_[i]));
    for (const Vertex& w : neighbors(spec_, interior_[i])) {
      auto it = index_.find(w);
      if (it != index_.end()) entries.emplace_back(ii, static_cast<Eigen::Index>(it->second), -1.0);
    }
  }
  factor_ = std::make_unique<Factor>();
  const auto n = static_cast<Eigen::Index>(interior_.size());
  factor_->laplacian.resize(n, n);
  factor_->laplacian.setFromTriplets(entries.begin(), entries.end());
  factor_->ldlt.compute(factor_->laplacian);
  if (factor_->ldlt.info() != Eigen::Success) throw DomainError("fused Laplacian is singular");
}

FusedNetwork::~FusedNetwork() = default;
FusedNetwork::FusedNetwork(FusedNetwork&&) noexcept = default;
FusedNetwork& FusedNetwork::operator=(FusedNetwork&&) noexcept = default;

std::size_t FusedNetwork::require_index(Vertex v) const {
  auto it = index_.find(v);
  if (it == index_.end()) throw DomainError("vertex " + to_string(v) + " is not in the interior");
  return it->second;
}

std::vector<double> FusedNetwork::green_column(Vertex x) const {
  const std::size_t i = require_index(x);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  rhs[static_cast<Eigen::Index>(i)] = 1.0;
  const Eigen::VectorXd phi = factor_->ldlt.solve(rhs);
  return std::vector<double>(phi.data(), phi.data() + phi.size());
}

double FusedNetwork::resistance_to_boundary(Vertex x) const {
  return green_column(x)[require_index(x)];
}

double FusedNetwork::fused_pair_resistance(Vertex x, Vertex y) const {
  const std::size_t i = require_index(x);
  const std::size_t j = require_index(y);
  if (i == j) return 0.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  rhs[static_cast<Eigen::Index>(i)] = 1.0;
  rhs[static_cast<Eigen::Index>(j)] = -1.0;
  const Eigen::VectorXd phi = factor_->ldlt.solve(rhs);
  return phi[static_cast<Eigen::Index>(i)] - phi[static_cast<Eigen::Index>(j)];
}

ExitProfile FusedNetwork::occupation_density(Vertex x) const {
  ExitProfile p;
  p.start = x;
  p.interior = interior_;
  p.deg = deg_;
  p.resistance_to_boundary = resistance_to_boundary(x);
  p.g.resize(size());
  for (std::size_t j = 0; j < size(); ++j) {
    const Vertex y = interior_[j];
    const double r_y = resistance_to_boundary(y);
    const double r_xy = fused_pair_resistance(x, y);
    p.g[j] = std::max(0.0, 0.5 * (p.resistance_to_boundary + r_y - r_xy));
    p.expected_exit_time += p.g[j] * deg_[j];
  }
  return p;
}

std::vector<double> FusedNetwork::exit_times_direct() const {
  const auto n = static_cast<Eigen::Index>(size());
  std::vector<Triplet> entries;
  entries.reserve(size() * 3);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    entries.emplace_back(ii, ii, 1.0);
    const double share = 1.0 / deg_[i];
    for (const Vertex& w : neighbors(spec_, interior_[i])) {
      auto it = index_.find(w);
      if (it != index_.end()) entries.emplace_back(ii, static_cast<Eigen::Index>(it->second), -share);
    }
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw DomainError("exit-time system is singular");
  const Eigen::VectorXd m = lu.solve(Eigen::VectorXd::Ones(n));
  return std::vector<double>(m.data(), m.data() + m.size());
}

double pair_resistance(const CombSpec& spec, Vertex u, Vertex v) {
  return static_cast<double>(distance(spec, u, v));
}

double pair_resistance_solve(const CombSpec& spec, Vertex u, Vertex v, std::span<const Vertex> window) {
  require_admissible(spec, u);
  require_admissible(spec, v);
  if (u == v) return 0.0;
  std::unordered_map<Vertex, Eigen::Index, VertexHash> index;
  for (const Vertex& w : window) {
    if (w != v) index.emplace(w, static_cast<Eigen::Index>(index.size()));
  }
  const bool has_v = std::find(window.begin(), window.end(), v) != window.end();
  if (!has_v || index.count(u) == 0) throw DomainError("window must contain both endpoints");

  // Laplacian of the induced subgraph with v grounded (row and column removed).
  std::vector<Triplet> entries;
  for (const auto& [w, i] : index) {
    int inside = 0;
    for (const Vertex& z : neighbors(spec, w)) {
      if (z == v) {
        ++inside;
        continue;
      }
      auto it = index.find(z);
      if (it == index.end()) continue;
      ++inside;
      entries.emplace_back(i, it->second, -1.0);
    }
    entries.emplace_back(i, i, static_cast<double>(inside));
  }
  const auto n = static_cast<Eigen::Index>(index.size());
  SparseMatrix lap(n, n);
  lap.setFromTriplets(entries.begin(), entries.end());
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(lap);
  if (ldlt.info() != Eigen::Success) throw DomainError("window does not connect the endpoints");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[index.at(u)] = 1.0;
  Eigen::VectorXd phi = ldlt.solve(rhs);
  // The grounded Laplacian of a long path has condition number ~ d^2, so refine
  // with the residual accumulated in extended precision.
  for (int round = 0; round < 2; ++round) {
    Eigen::VectorXd res(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      long double acc = rhs[i];
      for (SparseMatrix::InnerIterator it(lap, i); it; ++it) {
        acc -= static_cast<long double>(it.value()) * static_cast<long double>(phi[it.index()]);
      }
      res[i] = static_cast<double>(acc);
    }
    phi += ldlt.solve(res);
  }
  return phi[index.at(u)];
}

double pair_resistance_solve(const CombSpec& spec, Vertex u, Vertex v) {
  const Ball b = ball(spec, u, distance(spec, u, v) + 2);
  return pair_resistance_solve(spec, u, v, b.members);
}

double resistance_to_boundary(const CombSpec& spec, Vertex x, const std::vector<Vertex>& interior) {
  return FusedNetwork(spec, interior).resistance_to_boundary(x);
}

double fused_pair_resistance(const CombSpec& spec, Vertex x, Vertex y, const std::vector<Vertex>& interior) {
  return FusedNetwork(spec, interior).fused_pair_resistance(x, y);
}

ExitProfile occupation_density(const CombSpec& spec, Vertex x, const std::vector<Vertex>& interior) {
  return FusedNetwork(spec, interior).occupation_density(x);
}

double expected_exit_time_direct(const CombSpec& spec, Vertex x, const std::vector<Vertex>& interior) {
  FusedNetwork net(spec, interior);
  const std::vector<double> m = net.exit_times_direct();
  const auto it = std::lower_bound(net.interior().begin(), net.interior().end(), x);
  if (it == net.interior().end() || *it != x) throw DomainError("start is not in the interior");
  return m[static_cast<std::size_t>(it - net.interior().begin())];
}

}  // namespace comb
