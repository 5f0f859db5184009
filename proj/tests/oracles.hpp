#pragma once

// Brute-force oracles shared by the unit and acceptance tests. They only use
// tooth_height and the lattice picture of the comb, never the library's own
// neighbor or distance code.

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <vector>

#include "combcollide/comb_graph.hpp"

namespace oracle {

using comb::Coord;
using comb::Vertex;

// Lattice moves that stay on the comb: horizontal only along the backbone.
inline std::vector<Vertex> lattice_neighbors(const comb::CombSpec& spec, Vertex v) {
  std::vector<Vertex> out;
  const Vertex cand[] = {{v.n - 1, v.x}, {v.n + 1, v.x}, {v.n, v.x - 1}, {v.n, v.x + 1}};
  for (const Vertex& c : cand) {
    if (c.x < 0 || c.x > spec.tooth_height(c.n)) continue;
    if (c.n != v.n && (c.x != 0 || v.x != 0)) continue;
    out.push_back(c);
  }
  return out;
}

// BFS distances from `src` inside the window |n| <= W.
inline std::map<Vertex, Coord> bfs(const comb::CombSpec& spec, Vertex src, Coord W) {
  std::map<Vertex, Coord> dist{{src, 0}};
  std::deque<Vertex> queue{src};
  while (!queue.empty()) {
    const Vertex v = queue.front();
    queue.pop_front();
    for (const Vertex& w : lattice_neighbors(spec, v)) {
      if (w.n < -W || w.n > W || dist.count(w)) continue;
      dist[w] = dist[v] + 1;
      queue.push_back(w);
    }
  }
  return dist;
}

// Law of X_n by enumerating every path of length n.
inline std::map<Vertex, double> path_enumeration(const comb::CombSpec& spec, Vertex start, int n) {
  std::map<Vertex, double> law;
  auto rec = [&](auto&& self, Vertex v, int left, double p) -> void {
    if (left == 0) {
      law[v] += p;
      return;
    }
    const auto nb = lattice_neighbors(spec, v);
    for (const Vertex& w : nb) self(self, w, left - 1, p / static_cast<double>(nb.size()));
  };
  rec(rec, start, n, 1.0);
  return law;
}

// Law of the count of times n in [t_lo, t_hi] at which all walkers sit on the
// same target vertex before any walker leaves the strip |n| <= kill_N. Plain
// dictionary chain over joint positions; the last entry is P(count > K).
inline std::vector<double> joint_count_law(const comb::CombSpec& spec, const std::vector<Vertex>& starts,
                                           Coord kill_N, const std::set<Vertex>& target, std::int64_t t_lo,
                                           std::int64_t t_hi, int K) {
  using State = std::pair<std::vector<Vertex>, int>;
  std::map<State, double> cur{{{starts, 0}, 1.0}};
  std::vector<double> law(static_cast<std::size_t>(K) + 2, 0.0);
  auto outside = [&](Vertex v) { return v.n < -kill_N || v.n > kill_N; };
  for (const Vertex& v : starts) {
    if (outside(v)) {
      law[0] = 1.0;
      return law;
    }
  }
  for (std::int64_t n = 1; n <= t_hi; ++n) {
    std::map<State, double> nxt;
    for (const auto& [state, p] : cur) {
      // expand walker by walker
      std::vector<std::pair<std::vector<Vertex>, double>> partial{{{}, p}};
      for (const Vertex& v : state.first) {
        const auto nb = lattice_neighbors(spec, v);
        std::vector<std::pair<std::vector<Vertex>, double>> grown;
        for (const auto& [pos, q] : partial) {
          for (const Vertex& w : nb) {
            auto np = pos;
            np.push_back(w);
            grown.emplace_back(std::move(np), q / static_cast<double>(nb.size()));
          }
        }
        partial.swap(grown);
      }
      for (auto& [pos, q] : partial) {
        bool dead = false;
        for (const Vertex& v : pos) dead = dead || outside(v);
        if (dead) {
          law[static_cast<std::size_t>(state.second)] += q;
          continue;
        }
        int c = state.second;
        bool same = true;
        for (const Vertex& v : pos) same = same && v == pos.front();
        if (n >= t_lo && same && target.count(pos.front())) c = std::min(c + 1, K + 1);
        nxt[{std::move(pos), c}] += q;
      }
    }
    cur.swap(nxt);
  }
  for (const auto& [state, p] : cur) law[static_cast<std::size_t>(state.second)] += p;
  return law;
}

}  // namespace oracle
