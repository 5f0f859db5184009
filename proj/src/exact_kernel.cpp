#include "combcollide/exact_kernel.hpp"

#include <algorithm>
#include <sstream>

#include "combcollide/errors.hpp"

namespace comb {

namespace {

Coord abs_coord(Coord n) { return n < 0 ? -n : n; }

// Window that contains ball(start, t).
Bounds ball_window(Vertex start, std::int64_t t) {
  const Coord reach = std::max<Coord>(t - start.x, 0);
  return Bounds{start.n - reach, start.n + reach, start.x + t};
}

Bounds clip(Bounds b, const std::optional<KillRegion>& region) {
  return region ? intersect(b, region->bounds()) : b;
}

bool covers(const Bounds& have, const Bounds& need) {
  if (need.empty()) return true;
  return have.lo <= need.lo && have.hi >= need.hi && have.cap >= need.cap;
}

std::int64_t growth_slack(std::int64_t t) { return std::max<std::int64_t>(16, t / 2); }

std::vector<std::uint8_t> alive_mask(const ColumnLayout& layout, const KillRegion& region) {
  std::vector<std::uint8_t> alive(layout.size(), 0);
  for (Coord m = layout.lo(); m <= layout.hi(); ++m) {
    const std::size_t base = layout.offset(m);
    for (Coord x = 0; x <= layout.stored_height(m); ++x) {
      alive[base + static_cast<std::size_t>(x)] = region.contains({m, x}) ? 1 : 0;
    }
  }
  return alive;
}

// Pushes mass from every vertex in columns [alo, ahi] to its neighbours.
// weight(a, deg) gives the share sent along each edge; skip(a) filters sources.
template <class T, class Weight, class Skip>
void scatter(const ColumnLayout& layout, const std::uint8_t* alive, const T* in, T* out, Coord alo, Coord ahi,
             Weight weight, Skip skip) {
  auto deposit = [&](Coord m, Coord x, const T& share) {
    if (!layout.has_column(m) || x > layout.stored_height(m)) return;
    const std::size_t i = layout.offset(m) + static_cast<std::size_t>(x);
    if (alive != nullptr && alive[i] == 0) return;
    out[i] += share;
  };
  for (Coord m = alo; m <= ahi; ++m) {
    const std::size_t base = layout.offset(m);
    const Coord h = layout.height(m);
    const Coord top = layout.stored_height(m);
    for (Coord x = 0; x <= top; ++x) {
      const T& a = in[base + static_cast<std::size_t>(x)];
      if (skip(a)) continue;
      if (x == 0) {
        const T share = weight(a, h > 0 ? 3 : 2);
        deposit(m - 1, 0, share);
        if (h > 0) deposit(m, 1, share);
        deposit(m + 1, 0, share);
      } else {
        const T share = weight(a, x < h ? 2 : 1);
        deposit(m, x - 1, share);
        if (x < h) deposit(m, x + 1, share);
      }
    }
  }
}

// u'(w) = mean of u over the neighbours of w, for w in columns [olo, ohi].
void gather(const ColumnLayout& layout, const std::uint8_t* alive, const double* in, double* out, Coord olo,
            Coord ohi) {
  auto get = [&](Coord m, Coord x) -> double {
    if (!layout.has_column(m) || x > layout.stored_height(m)) return 0.0;
    return in[layout.offset(m) + static_cast<std::size_t>(x)];
  };
  for (Coord m = olo; m <= ohi; ++m) {
    const std::size_t base = layout.offset(m);
    const Coord h = layout.height(m);
    const Coord top = layout.stored_height(m);
    for (Coord x = 0; x <= top; ++x) {
      const std::size_t i = base + static_cast<std::size_t>(x);
      if (alive != nullptr && alive[i] == 0) continue;
      double s = 0.0;
      if (x == 0) {
        s = get(m - 1, 0) + get(m + 1, 0);
        if (h > 0) s += get(m, 1);
        s /= (h > 0 ? 3.0 : 2.0);
      } else {
        s = get(m, x - 1);
        if (x < h) s = (s + get(m, x + 1)) / 2.0;
      }
      out[i] = s;
    }
  }
}

bool same_parity(std::span<const Vertex> starts) {
  for (const Vertex& v : starts) {
    if (parity(v) != parity(starts.front())) return false;
  }
  return true;
}

}  // namespace

Bounds intersect(const Bounds& a, const Bounds& b) {
  return Bounds{std::max(a.lo, b.lo), std::min(a.hi, b.hi), std::min(a.cap, b.cap)};
}

KillRegion KillRegion::strip(Coord N) {
  if (N < 0) throw DomainError("strip half-width must be non-negative");
  KillRegion r;
  r.kind_ = Kind::strip;
  r.strip_N_ = N;
  return r;
}

KillRegion KillRegion::ball(Vertex center, Coord radius) {
  if (radius < 0) throw DomainError("ball radius must be non-negative");
  KillRegion r;
  r.kind_ = Kind::ball;
  r.center_ = center;
  r.radius_ = radius;
  return r;
}

KillRegion KillRegion::vertex_set(std::vector<Vertex> members) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  KillRegion r;
  r.kind_ = Kind::vertex_set;
  r.members_ = std::make_shared<const std::vector<Vertex>>(std::move(members));
  return r;
}

bool KillRegion::contains(Vertex v) const {
  switch (kind_) {
    case Kind::strip:
      return abs_coord(v.n) <= strip_N_;
    case Kind::ball:
      return tree_distance(center_, v) <= radius_;
    case Kind::vertex_set:
      return std::binary_search(members_->begin(), members_->end(), v);
  }
  return false;
}

Bounds KillRegion::bounds() const {
  switch (kind_) {
    case Kind::strip:
      return Bounds{-strip_N_, strip_N_, kNoCap};
    case Kind::ball:
      return ball_window(center_, radius_);
    case Kind::vertex_set: {
      if (members_->empty()) return Bounds{0, -1, -1};
      Bounds b{members_->front().n, members_->back().n, 0};
      for (const Vertex& v : *members_) b.cap = std::max(b.cap, v.x);
      return b;
    }
  }
  return Bounds{};
}

std::string KillRegion::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::strip:
      os << "strip(" << strip_N_ << ')';
      break;
    case Kind::ball:
      os << "ball(" << to_string(center_) << ',' << radius_ << ')';
      break;
    case Kind::vertex_set:
      os << "set(" << members_->size() << " vertices)";
      break;
  }
  return os.str();
}

ColumnLayout::ColumnLayout(const CombSpec& spec, Bounds bounds, const ColumnLayout* reuse) : bounds_(bounds) {
  if (bounds_.empty()) {
    bounds_ = Bounds{0, -1, -1};
    offsets_.push_back(0);
    return;
  }
  const auto cols = static_cast<std::size_t>(bounds_.hi - bounds_.lo + 1);
  heights_.resize(cols);
  offsets_.resize(cols + 1);
  offsets_[0] = 0;
  for (std::size_t i = 0; i < cols; ++i) {
    const Coord m = bounds_.lo + static_cast<Coord>(i);
    heights_[i] = (reuse != nullptr && reuse->has_column(m)) ? reuse->height(m) : spec.tooth_height(m);
    offsets_[i + 1] = offsets_[i] + static_cast<std::size_t>(std::min(heights_[i], bounds_.cap) + 1);
  }
}

DistVector DistVector::delta(const CombSpec& spec, Vertex start, std::optional<KillRegion> killed_on) {
  require_admissible(spec, start);
  DistVector d;
  d.start_ = start;
  d.killed_on_ = std::move(killed_on);
  d.rebuild(spec, clip(ball_window(start, growth_slack(0)), d.killed_on_));
  if (!d.killed_on_ || d.killed_on_->contains(start)) {
    d.mass_[*d.layout_->index(start)] = 1.0;
    d.active_lo_ = d.active_hi_ = start.n;
  }
  return d;
}

DistVector DistVector::arrival(const CombSpec& spec, Vertex target, std::optional<KillRegion> killed_on) {
  DistVector d = delta(spec, target, std::move(killed_on));
  d.backward_ = true;
  return d;
}

Bounds DistVector::required_bounds(std::int64_t t) const { return clip(ball_window(start_, t), killed_on_); }

void DistVector::rebuild(const CombSpec& spec, Bounds bounds) {
  auto layout = std::make_shared<const ColumnLayout>(spec, bounds, layout_.get());
  std::vector<double> mass(layout->size(), 0.0);
  if (layout_ && active_lo_ <= active_hi_) {
    for (Coord m = active_lo_; m <= active_hi_; ++m) {
      const std::size_t src = layout_->offset(m);
      const std::size_t dst = layout->offset(m);
      for (Coord x = 0; x <= layout_->stored_height(m); ++x) {
        mass[dst + static_cast<std::size_t>(x)] = mass_[src + static_cast<std::size_t>(x)];
      }
    }
  }
  layout_ = std::move(layout);
  mass_ = std::move(mass);
  scratch_.assign(mass_.size(), 0.0);
  if (killed_on_ && !killed_on_->box_is_exact()) {
    alive_ = std::make_shared<const std::vector<std::uint8_t>>(alive_mask(*layout_, *killed_on_));
  } else {
    alive_.reset();
  }
}

void DistVector::ensure_window(const CombSpec& spec, std::int64_t t) {
  if (covers(layout_->bounds(), required_bounds(t))) return;
  rebuild(spec, required_bounds(t + growth_slack(t)));
}

void DistVector::advance(const CombSpec& spec) {
  ++step_;
  if (active_hi_ < active_lo_) return;
  ensure_window(spec, step_);
  const ColumnLayout& lay = *layout_;
  const Coord olo = std::max(active_lo_ - 1, lay.lo());
  const Coord ohi = std::min(active_hi_ + 1, lay.hi());
  const std::uint8_t* alive = alive_ ? alive_->data() : nullptr;

  // scratch_ is all zero on entry
  if (backward_) {
    gather(lay, alive, mass_.data(), scratch_.data(), olo, ohi);
  } else {
    scatter(lay, alive, mass_.data(), scratch_.data(), active_lo_, active_hi_,
            [](double a, int deg) { return a / static_cast<double>(deg); },
            [](double a) { return a < kMassFloor; });
  }
  std::fill(mass_.begin() + static_cast<std::ptrdiff_t>(lay.offset(active_lo_)),
            mass_.begin() + static_cast<std::ptrdiff_t>(lay.offset(active_hi_) +
                                                         static_cast<std::size_t>(lay.stored_height(active_hi_)) + 1),
            0.0);
  mass_.swap(scratch_);
  active_lo_ = olo;
  active_hi_ = ohi;

  auto column_negligible = [&](Coord m) {
    const std::size_t base = lay.offset(m);
    for (Coord x = 0; x <= lay.stored_height(m); ++x) {
      if (mass_[base + static_cast<std::size_t>(x)] >= kMassFloor) return false;
    }
    return true;
  };
  auto clear_column = [&](Coord m) {
    const std::size_t base = lay.offset(m);
    for (Coord x = 0; x <= lay.stored_height(m); ++x) mass_[base + static_cast<std::size_t>(x)] = 0.0;
  };
  while (active_lo_ <= active_hi_ && column_negligible(active_lo_)) clear_column(active_lo_++);
  while (active_lo_ <= active_hi_ && column_negligible(active_hi_)) clear_column(active_hi_--);
}

double DistVector::remove_mass(Vertex v) noexcept {
  const auto i = layout_->index(v);
  if (!i) return 0.0;
  const double a = mass_[*i];
  mass_[*i] = 0.0;
  return a;
}

double DistVector::mass(Vertex v) const noexcept {
  const auto i = layout_->index(v);
  return i ? mass_[*i] : 0.0;
}

double DistVector::total_mass() const noexcept {
  double total = 0.0;
  for_each([&](Vertex, double a, int) { total += a; });
  return total;
}

std::size_t DistVector::support_size() const noexcept {
  std::size_t count = 0;
  for_each([&](Vertex, double, int) { ++count; });
  return count;
}

std::vector<std::pair<Vertex, double>> DistVector::support() const {
  std::vector<std::pair<Vertex, double>> out;
  for_each([&](Vertex v, double a, int) { out.emplace_back(v, a); });
  return out;
}

DistVector step(const CombSpec& spec, const DistVector& d) {
  DistVector next = d;
  next.advance(spec);
  return next;
}

KernelValue kernel(const CombSpec& spec, Vertex x, Vertex y, std::int64_t n,
                   const std::optional<KillRegion>& killed_on) {
  if (n < 0) throw DomainError("step count must be non-negative");
  require_admissible(spec, y);
  DistVector d = DistVector::delta(spec, x, killed_on);
  for (std::int64_t i = 0; i < n; ++i) d.advance(spec);
  KernelValue kv;
  kv.value = d.mass(y) / static_cast<double>(degree(spec, y));
  kv.n = n;
  kv.x = x;
  kv.y = y;
  kv.killed_on = killed_on;
  kv.survival_mass = d.total_mass();
  kv.support_size = d.support_size();
  return kv;
}

std::vector<double> on_diagonal_series(const CombSpec& spec, Vertex x, std::int64_t n_max,
                                       const std::optional<KillRegion>& killed_on) {
  if (n_max < 0) throw DomainError("n_max must be non-negative");
  const double deg = degree(spec, x);
  std::vector<double> out;
  propagate(spec, x, n_max - n_max % 2, killed_on, [&](std::int64_t n, const DistVector& d) {
    if (n % 2 == 0) out.push_back(d.mass(x) / deg);
  });
  return out;
}

std::vector<double> on_diagonal_series_halfstep(const CombSpec& spec, Vertex x, std::int64_t k_max,
                                                const std::optional<KillRegion>& killed_on) {
  if (k_max < 0) throw DomainError("k_max must be non-negative");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k_max + 1));
  propagate(spec, x, k_max, killed_on, [&](std::int64_t, const DistVector& d) {
    double s = 0.0;
    d.for_each([&](Vertex, double a, int deg) { s += a * a / deg; });
    out.push_back(s);
  });
  return out;
}

std::vector<double> collision_probability_series(const CombSpec& spec, std::span<const Vertex> starts,
                                                 std::int64_t n_max, const std::optional<KillRegion>& killed_on) {
  if (starts.empty()) throw DomainError("at least one walker is required");
  if (n_max < 0) throw DomainError("n_max must be non-negative");
  for (const Vertex& v : starts) require_admissible(spec, v);
  std::vector<double> out(static_cast<std::size_t>(n_max + 1), 0.0);
  if (!same_parity(starts)) return out;

  std::vector<std::pair<Vertex, int>> groups;
  for (const Vertex& v : starts) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == v; });
    if (it == groups.end()) {
      groups.emplace_back(v, 1);
    } else {
      ++it->second;
    }
  }
  std::vector<DistVector> laws;
  laws.reserve(groups.size());
  for (const auto& g : groups) laws.push_back(DistVector::delta(spec, g.first, killed_on));

  auto ipow = [](double a, int k) {
    double r = a;
    for (int i = 1; i < k; ++i) r *= a;
    return r;
  };
  for (std::int64_t n = 0; n <= n_max; ++n) {
    if (n > 0) {
      for (DistVector& d : laws) d.advance(spec);
    }
    double total = 0.0;
    laws.front().for_each([&](Vertex w, double a, int) {
      double p = ipow(a, groups.front().second);
      for (std::size_t g = 1; g < laws.size() && p != 0.0; ++g) {
        p *= ipow(laws[g].mass(w), groups[g].second);
      }
      total += p;
    });
    out[static_cast<std::size_t>(n)] = total;
  }
  return out;
}

double k_collision_probability(const CombSpec& spec, std::span<const Vertex> starts, std::int64_t n,
                               const std::optional<KillRegion>& killed_on) {
  return collision_probability_series(spec, starts, n, killed_on).back();
}

double triple_collision_probability(const CombSpec& spec, Vertex x, Vertex y, Vertex z, std::int64_t n,
                                    const std::optional<KillRegion>& killed_on) {
  const Vertex starts[] = {x, y, z};
  return k_collision_probability(spec, starts, n, killed_on);
}

std::vector<double> first_hit_profile(const CombSpec& spec, Vertex x, Vertex y, std::int64_t n_max,
                                      const std::optional<KillRegion>& killed_on) {
  require_admissible(spec, y);
  std::vector<double> f(static_cast<std::size_t>(n_max + 1), 0.0);
  DistVector d = DistVector::delta(spec, x, killed_on);
  for (std::int64_t m = 0; m <= n_max; ++m) {
    if (m > 0) d.advance(spec);
    f[static_cast<std::size_t>(m)] = d.remove_mass(y);
  }
  return f;
}

double kernel_1d(Coord L, Coord x, Coord y, std::int64_t n) {
  if (L < 2) throw DomainError("interval length must be at least 2");
  if (x < 0 || x > L || y < 0 || y > L) throw DomainError("points must lie in {0, ..., L}");
  if (n < 0) throw DomainError("step count must be non-negative");
  double value = 0.0;
  propagate_1d(L, x, n, [&](std::int64_t i, std::span<const double> q) {
    if (i == n) value = q[static_cast<std::size_t>(y)];
  });
  return value;
}

ExactDistVector ExactDistVector::delta(const CombSpec& spec, Vertex start, std::optional<KillRegion> killed_on) {
  require_admissible(spec, start);
  ExactDistVector d;
  d.start_ = start;
  d.killed_on_ = std::move(killed_on);
  d.layout_ = std::make_shared<const ColumnLayout>(spec, clip(ball_window(start, 16), d.killed_on_));
  d.mass_.assign(d.layout_->size(), BigInt(0));
  if (d.killed_on_) d.alive_ = alive_mask(*d.layout_, *d.killed_on_);
  if (!d.killed_on_ || d.killed_on_->contains(start)) d.mass_[*d.layout_->index(start)] = 1;
  return d;
}

BigInt ExactDistVector::scaled_mass(Vertex v) const {
  const auto i = layout_->index(v);
  return i ? mass_[*i] : BigInt(0);
}

Rational ExactDistVector::mass(Vertex v) const {
  BigInt denom = boost::multiprecision::pow(BigInt(6), static_cast<unsigned>(step_));
  return Rational(scaled_mass(v), denom);
}

Rational ExactDistVector::total_mass() const {
  BigInt sum = 0;
  for (const BigInt& a : mass_) sum += a;
  return Rational(sum, boost::multiprecision::pow(BigInt(6), static_cast<unsigned>(step_)));
}

void ExactDistVector::advance(const CombSpec& spec) {
  const Bounds need = clip(ball_window(start_, step_ + 1), killed_on_);
  if (!covers(layout_->bounds(), need)) {
    auto layout = std::make_shared<const ColumnLayout>(
        spec, clip(ball_window(start_, step_ + 1 + growth_slack(step_)), killed_on_), layout_.get());
    std::vector<BigInt> mass(layout->size(), BigInt(0));
    for (Coord m = layout_->lo(); m <= layout_->hi(); ++m) {
      for (Coord x = 0; x <= layout_->stored_height(m); ++x) {
        mass[*layout->index({m, x})] = std::move(mass_[*layout_->index({m, x})]);
      }
    }
    layout_ = std::move(layout);
    mass_ = std::move(mass);
    if (killed_on_) alive_ = alive_mask(*layout_, *killed_on_);
  }
  std::vector<BigInt> out(mass_.size(), BigInt(0));
  if (layout_->size() > 0) {
    scatter(*layout_, alive_.empty() ? nullptr : alive_.data(), mass_.data(), out.data(), layout_->lo(),
            layout_->hi(), [](const BigInt& a, int deg) { return BigInt(a * (6 / deg)); },
            [](const BigInt& a) { return a.is_zero(); });
  }
  mass_ = std::move(out);
  ++step_;
}

Rational kernel_exact(const CombSpec& spec, Vertex x, Vertex y, std::int64_t n,
                      const std::optional<KillRegion>& killed_on) {
  require_admissible(spec, y);
  ExactDistVector d = ExactDistVector::delta(spec, x, killed_on);
  for (std::int64_t i = 0; i < n; ++i) d.advance(spec);
  return d.mass(y) / degree(spec, y);
}

std::vector<Rational> on_diagonal_series_exact(const CombSpec& spec, Vertex x, std::int64_t n_max,
                                               const std::optional<KillRegion>& killed_on) {
  const int deg = degree(spec, x);
  ExactDistVector d = ExactDistVector::delta(spec, x, killed_on);
  std::vector<Rational> out{d.mass(x) / deg};
  for (std::int64_t n = 1; n <= n_max - n_max % 2; ++n) {
    d.advance(spec);
    if (n % 2 == 0) out.push_back(d.mass(x) / deg);
  }
  return out;
}

}  // namespace comb
