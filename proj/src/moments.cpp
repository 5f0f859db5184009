#include "combcollide/moments.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "combcollide/errors.hpp"

namespace comb {

namespace {

struct Group {
  Vertex start;
  int multiplicity;
};

std::vector<Group> group_starts(const std::vector<Vertex>& starts) {
  std::vector<Group> groups;
  for (const Vertex& v : starts) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.start == v; });
    if (it == groups.end()) {
      groups.push_back({v, 1});
    } else {
      ++it->multiplicity;
    }
  }
  return groups;
}

bool shared_parity(const std::vector<Vertex>& starts) {
  for (const Vertex& v : starts) {
    if (parity(v) != parity(starts.front())) return false;
  }
  return true;
}

double ipow(double a, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= a;
  return r;
}

void validate(const CombSpec& spec, const CountProblem& p) {
  if (p.starts.empty()) throw DomainError("at least one walker is required");
  if (p.target.empty()) throw EmptyTargetRegion("collision target is empty");
  if (p.t_lo < 1) throw DomainError("counting starts at n = 1");
  for (const Vertex& v : p.starts) require_admissible(spec, v);
}

// Calls f(n, laws) for n = 0 .. t_hi with the killed laws of every start group.
template <class F>
void lockstep(const CombSpec& spec, const std::vector<Group>& groups, const std::optional<KillRegion>& region,
              std::int64_t t_hi, F&& f) {
  std::vector<DistVector> laws;
  laws.reserve(groups.size());
  for (const Group& g : groups) laws.push_back(DistVector::delta(spec, g.start, region));
  for (std::int64_t n = 0; n <= t_hi; ++n) {
    if (n > 0) {
      for (DistVector& d : laws) d.advance(spec);
    }
    f(n, static_cast<const std::vector<DistVector>&>(laws));
  }
}

double joint_mass(const std::vector<Group>& groups, const std::vector<DistVector>& laws, Vertex w) {
  double p = 1.0;
  for (std::size_t g = 0; g < groups.size() && p != 0.0; ++g) p *= ipow(laws[g].mass(w), groups[g].multiplicity);
  return p;
}

double approx_window(const CombSpec& spec, const CountProblem& p) {
  const double span = 2.0 * static_cast<double>(p.t_hi) + 1.0;
  double window = span * (static_cast<double>(p.t_hi) + 1.0);
  if (p.killed_on && p.killed_on->kind() == KillRegion::Kind::strip) {
    const Coord N = p.killed_on->strip_half_width();
    window = std::min(window, static_cast<double>(strip_members(spec, Strip{N}).size()));
  }
  return window;
}

}  // namespace

double diffusive_scale(const CombSpec& spec, Coord N) {
  const double n = static_cast<double>(N);
  return n * n * spec.log_pow(n);
}

std::int64_t t1(const CombSpec& spec, const RegionConstants& rc) {
  return static_cast<std::int64_t>(std::floor(rc.c2 * (1.0 - rc.eps) * diffusive_scale(spec, rc.N)));
}

std::int64_t t2(const CombSpec& spec, const RegionConstants& rc) {
  return static_cast<std::int64_t>(std::floor(rc.delta * diffusive_scale(spec, rc.N)));
}

std::int64_t k0(const CombSpec& spec, Coord N) {
  return static_cast<std::int64_t>(std::floor(16.0 * spec.log_pow(static_cast<double>(N), 3.0 * spec.alpha())));
}

std::vector<Vertex> h1_target(const CombSpec& spec, const RegionConstants& rc) {
  if (rc.N < 2) throw DomainError("H1 needs N >= 2");
  if (rc.h < 2) throw DomainError("strip multiplier h must be at least 2");
  const double L = spec.log_pow(static_cast<double>(rc.N) / 2.0);
  const auto lo = static_cast<Coord>(std::ceil(rc.eps * L - 1e-9));
  const auto hi = static_cast<Coord>(std::floor(2.0 * rc.eps * L + 1e-9));
  std::vector<Vertex> out;
  for (Coord w = rc.N / 2 + 1; w <= rc.N; ++w) {
    const Coord top = std::min(hi, spec.tooth_height(w));
    for (Coord l = std::max<Coord>(lo, 0); l <= top; ++l) out.push_back({w, l});
  }
  if (out.empty()) throw EmptyTargetRegion("the H1 target region S is empty for these constants");
  return out;
}

std::vector<Vertex> annulus_target(const CombSpec& spec, Coord N) {
  std::vector<Vertex> out;
  for (Coord w = -2 * N; w <= 2 * N; ++w) {
    const Coord a = w < 0 ? -w : w;
    if (2 * a <= N) continue;  // |w| <= N/2
    for (Coord l = 0; l <= spec.tooth_height(w); ++l) out.push_back({w, l});
  }
  if (out.empty()) throw EmptyTargetRegion("annulus target is empty");
  return out;
}

CountProblem h1_problem(const CombSpec& spec, const RegionConstants& rc, std::vector<Vertex> starts,
                        std::optional<std::int64_t> horizon) {
  CountProblem p;
  p.starts = std::move(starts);
  p.killed_on = KillRegion::strip(rc.h * rc.N);
  p.target = h1_target(spec, rc);
  p.t_lo = 1;
  p.t_hi = horizon ? std::min(*horizon, t1(spec, rc)) : t1(spec, rc);
  return p;
}

CountProblem h2_problem(const CombSpec& spec, const RegionConstants& rc, std::vector<Vertex> starts,
                        std::optional<std::int64_t> horizon) {
  if (rc.h < 2) throw DomainError("strip multiplier h must be at least 2");
  CountProblem p;
  p.starts = std::move(starts);
  p.killed_on = KillRegion::strip(rc.h * rc.N);
  p.target = annulus_target(spec, rc.N);
  p.t_lo = 1;
  p.t_hi = horizon ? std::min(*horizon, t2(spec, rc)) : t2(spec, rc);
  return p;
}

CountProblem hn_problem(const CombSpec& spec, const RegionConstants& rc, std::vector<Vertex> starts,
                        std::int64_t t_hi) {
  CountProblem p;
  p.target = strip_members(spec, Strip{rc.h * rc.N});
  p.starts = std::move(starts);
  p.killed_on = KillRegion::strip(rc.h * rc.N);
  p.t_lo = 1;
  p.t_hi = t_hi;
  return p;
}

double expected_count(const CombSpec& spec, const CountProblem& p) {
  validate(spec, p);
  if (!shared_parity(p.starts) || p.t_hi < p.t_lo) return 0.0;
  const auto groups = group_starts(p.starts);
  double total = 0.0;
  lockstep(spec, groups, p.killed_on, p.t_hi, [&](std::int64_t n, const std::vector<DistVector>& laws) {
    if (n < p.t_lo) return;
    for (const Vertex& w : p.target) total += joint_mass(groups, laws, w);
  });
  return total;
}

double expected_H1(const CombSpec& spec, const RegionConstants& rc, std::int64_t t_lo, std::int64_t t_hi,
                   std::vector<Vertex> starts) {
  for (const Vertex& v : starts) {
    if (!Strip{rc.N}.contains(v)) throw DomainError("H1 starts must lie in V_N");
  }
  CountProblem p = h1_problem(spec, rc, std::move(starts));
  p.t_lo = std::max<std::int64_t>(t_lo, 1);
  p.t_hi = std::min(t_hi, p.t_hi);
  return expected_count(spec, p);
}

MomentPair count_moments(const CombSpec& spec, const CountProblem& p, double work_limit) {
  validate(spec, p);
  MomentPair out;
  if (!shared_parity(p.starts) || p.t_hi < p.t_lo) return out;
  const double work = static_cast<double>(p.target.size()) * static_cast<double>(p.t_hi) * approx_window(spec, p);
  if (work > work_limit) throw ResourceLimit("exact second moment exceeds the work limit; use Monte Carlo");

  const auto k = static_cast<int>(p.starts.size());
  const std::int64_t span = p.t_hi - p.t_lo;

  // tail[w][J] = sum_{j=1}^{J} sum_{w'} P^w(X_j = w', alive)^k
  std::vector<std::vector<double>> tail(p.target.size());
  for (std::size_t i = 0; i < p.target.size(); ++i) {
    auto& acc = tail[i];
    acc.assign(static_cast<std::size_t>(span + 1), 0.0);
    if (p.killed_on && !p.killed_on->contains(p.target[i])) continue;
    propagate(spec, p.target[i], span, p.killed_on, [&](std::int64_t j, const DistVector& d) {
      if (j == 0) return;
      double b = 0.0;
      for (const Vertex& w : p.target) b += ipow(d.mass(w), k);
      acc[static_cast<std::size_t>(j)] = acc[static_cast<std::size_t>(j - 1)] + b;
    });
  }

  const auto groups = group_starts(p.starts);
  double cross = 0.0;
  lockstep(spec, groups, p.killed_on, p.t_hi, [&](std::int64_t n, const std::vector<DistVector>& laws) {
    if (n < p.t_lo) return;
    for (std::size_t i = 0; i < p.target.size(); ++i) {
      const double a = joint_mass(groups, laws, p.target[i]);
      if (a == 0.0) continue;
      out.first += a;
      cross += a * tail[i][static_cast<std::size_t>(p.t_hi - n)];
    }
  });
  out.second = out.first + 2.0 * cross;
  return out;
}

double CountLaw::mean() const {
  double m = 0.0;
  for (std::size_t c = 0; c < pmf.size(); ++c) m += static_cast<double>(c) * pmf[c];
  return m;
}

double CountLaw::second_moment() const {
  if (overflow > 0.0) throw DomainError("law is truncated; second moment unavailable");
  double m = 0.0;
  for (std::size_t c = 0; c < pmf.size(); ++c) m += static_cast<double>(c * c) * pmf[c];
  return m;
}

double CountLaw::tail(double threshold) const {
  double t = 0.0;
  for (std::size_t c = 0; c < pmf.size(); ++c) {
    if (static_cast<double>(c) >= threshold) t += pmf[c];
  }
  return t + overflow;
}

CountLaw count_law(const CombSpec& spec, const CountProblem& p, int K, double state_limit) {
  validate(spec, p);
  if (K < 0) throw DomainError("count truncation must be non-negative");
  const auto rank = static_cast<int>(p.starts.size());
  if (rank > 3) throw DomainError("joint law supports at most three walkers");
  CountLaw law;
  law.pmf.assign(static_cast<std::size_t>(K + 1), 0.0);
  const bool alive_at_start =
      std::all_of(p.starts.begin(), p.starts.end(), [&](Vertex v) { return !p.killed_on || p.killed_on->contains(v); });
  if (!shared_parity(p.starts) || p.t_hi < p.t_lo || !alive_at_start) {
    law.pmf[0] = 1.0;
    return law;
  }

  // W split by parity; only vertices within t_hi of some start matter.
  std::vector<Vertex> cls[2];
  std::unordered_map<Vertex, std::size_t, VertexHash> index[2];
  {
    std::vector<Vertex> all;
    for (const Vertex& s : p.starts) {
      for (const Vertex& v : ball(spec, s, p.t_hi).members) {
        if (!p.killed_on || p.killed_on->contains(v)) all.push_back(v);
      }
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    for (const Vertex& v : all) {
      const int c = parity(v);
      index[c].emplace(v, cls[c].size());
      cls[c].push_back(v);
    }
  }
  const std::size_t slots = static_cast<std::size_t>(K) + 2;  // 0..K and overflow
  const double widest = static_cast<double>(std::max(cls[0].size(), cls[1].size()));
  if (std::pow(widest, rank) * static_cast<double>(slots) > state_limit) {
    throw ResourceLimit("joint collision chain exceeds the state limit; use Monte Carlo");
  }

  // pred[b][j] = (i, 1/deg(i)) over i in class 1-b adjacent to j in class b
  std::vector<std::vector<std::pair<std::size_t, double>>> pred[2];
  for (int b = 0; b < 2; ++b) {
    pred[b].resize(cls[b].size());
    for (std::size_t j = 0; j < cls[b].size(); ++j) {
      for (const Vertex& i : neighbors(spec, cls[b][j])) {
        auto it = index[1 - b].find(i);
        if (it != index[1 - b].end()) pred[b][j].emplace_back(it->second, 1.0 / degree(spec, i));
      }
    }
  }

  int cur = parity(p.starts.front());
  std::vector<std::size_t> dims(static_cast<std::size_t>(rank), cls[cur].size());
  auto volume_of = [&](const std::vector<std::size_t>& d) {
    std::size_t v = slots;
    for (std::size_t x : d) v *= x;
    return v;
  };
  std::vector<double> tensor(volume_of(dims), 0.0);
  {
    std::size_t flat = 0;
    for (int a = 0; a < rank; ++a) flat = flat * dims[static_cast<std::size_t>(a)] + index[cur].at(p.starts[static_cast<std::size_t>(a)]);
    tensor[flat * slots] = 1.0;
  }
  std::vector<double> frozen(slots, 0.0);
  auto slot_totals = [&](const std::vector<double>& t) {
    std::vector<double> s(slots, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) s[i % slots] += t[i];
    return s;
  };

  std::vector<double> next;
  for (std::int64_t n = 1; n <= p.t_hi; ++n) {
    const int nb = 1 - cur;
    const std::vector<double> before = slot_totals(tensor);
    for (int axis = 0; axis < rank; ++axis) {
      std::size_t outer = 1;
      for (int a = 0; a < axis; ++a) outer *= dims[static_cast<std::size_t>(a)];
      std::size_t inner = slots;
      for (int a = axis + 1; a < rank; ++a) inner *= dims[static_cast<std::size_t>(a)];
      const std::size_t din = dims[static_cast<std::size_t>(axis)];
      const std::size_t dout = cls[nb].size();
      next.assign(outer * dout * inner, 0.0);
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < dout; ++j) {
          double* dst = next.data() + (o * dout + j) * inner;
          for (const auto& [i, w] : pred[nb][j]) {
            const double* src = tensor.data() + (o * din + i) * inner;
            for (std::size_t q = 0; q < inner; ++q) dst[q] += w * src[q];
          }
        }
      }
      dims[static_cast<std::size_t>(axis)] = dout;
      tensor.swap(next);
    }
    cur = nb;
    const std::vector<double> after = slot_totals(tensor);
    for (std::size_t c = 0; c < slots; ++c) frozen[c] += std::max(0.0, before[c] - after[c]);

    if (n >= p.t_lo) {
      for (const Vertex& w : p.target) {
        auto it = index[cur].find(w);
        if (it == index[cur].end()) continue;
        std::size_t flat = 0;
        for (int a = 0; a < rank; ++a) flat = flat * dims[static_cast<std::size_t>(a)] + it->second;
        double* cell = tensor.data() + flat * slots;
        cell[slots - 1] += cell[slots - 2];
        for (std::size_t c = slots - 2; c > 0; --c) cell[c] = cell[c - 1];
        cell[0] = 0.0;
      }
    }
  }
  const std::vector<double> alive = slot_totals(tensor);
  for (std::size_t c = 0; c <= static_cast<std::size_t>(K); ++c) law.pmf[c] = frozen[c] + alive[c];
  law.overflow = frozen[slots - 1] + alive[slots - 1];
  return law;
}

}  // namespace comb
