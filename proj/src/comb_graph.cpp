#include "combcollide/comb_graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "combcollide/errors.hpp"

namespace comb {

namespace {

// Heights are floors of real expressions; values within this distance below an
// integer are treated as that integer so exact cases such as 4^0.5 or log_2(8)
// are not lost to rounding.
constexpr double kFloorSlack = 1e-9;

Coord floor_height(double v) {
  if (!(v > 0.0)) return 0;
  return static_cast<Coord>(std::floor(v + kFloorSlack));
}

Coord abs_coord(Coord n) { return n < 0 ? -n : n; }

}  // namespace

std::string to_string(Vertex v) {
  std::ostringstream os;
  os << '(' << v.n << ',' << v.x << ')';
  return os.str();
}

CombSpec CombSpec::log_comb(double alpha, double log_base) {
  if (!(alpha > 0.0)) throw DomainError("log comb requires alpha > 0");
  if (log_base != 0.0 && !(log_base > 1.0)) throw DomainError("log base must exceed 1");
  CombSpec s;
  s.family_ = Family::log_comb;
  s.alpha_ = alpha;
  s.log_base_ = log_base;
  s.symmetric_ = true;
  return s;
}

CombSpec CombSpec::poly_comb(double alpha) {
  if (!(alpha > 0.0)) throw DomainError("poly comb requires alpha > 0");
  CombSpec s;
  s.family_ = Family::poly_comb;
  s.alpha_ = alpha;
  s.symmetric_ = true;
  return s;
}

CombSpec CombSpec::custom(HeightFn height, std::string description, bool symmetric) {
  if (!height) throw DomainError("custom comb requires a height function");
  CombSpec s;
  s.family_ = Family::custom;
  s.alpha_ = 1.0;
  s.symmetric_ = symmetric;
  s.custom_ = std::move(height);
  s.description_ = std::move(description);
  return s;
}

CombSpec CombSpec::uniform(Coord height) {
  if (height < 0) throw DomainError("tooth height must be non-negative");
  std::ostringstream os;
  os << "uniform(" << height << ')';
  return custom([height](Coord) { return height; }, os.str(), true);
}

double CombSpec::log_pow(double t) const { return log_pow(t, alpha_); }

double CombSpec::log_pow(double t, double exponent) const {
  if (!(t > 1.0)) return 0.0;
  double l = std::log(t);
  if (log_base_ != 0.0) l /= std::log(log_base_);
  return std::pow(l, exponent);
}

Coord CombSpec::tooth_height(Coord n) const {
  const Coord m = std::max<Coord>(abs_coord(n), 1);
  switch (family_) {
    case Family::log_comb:
      return floor_height(log_pow(static_cast<double>(m)));
    case Family::poly_comb:
      if (n == 0) return 0;
      return floor_height(std::pow(static_cast<double>(m), alpha_));
    case Family::custom: {
      const Coord h = custom_(n);
      if (h < 0) throw DomainError("custom height function returned a negative height");
      return h;
    }
  }
  return 0;
}

std::string CombSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (family_) {
    case Family::log_comb:
      os << "log(alpha=" << alpha_;
      if (log_base_ != 0.0) os << ",base=" << log_base_;
      os << ')';
      break;
    case Family::poly_comb:
      os << "poly(alpha=" << alpha_ << ')';
      break;
    case Family::custom:
      os << "custom(" << description_ << ')';
      break;
  }
  return os.str();
}

bool admissible(const CombSpec& spec, Vertex v) {
  return v.x >= 0 && v.x <= spec.tooth_height(v.n);
}

void require_admissible(const CombSpec& spec, Vertex v) {
  if (!admissible(spec, v)) {
    throw DomainError("vertex " + to_string(v) + " is not in " + spec.describe());
  }
}

int degree(const CombSpec& spec, Vertex v) {
  require_admissible(spec, v);
  const Coord h = spec.tooth_height(v.n);
  if (v.x == 0) return h > 0 ? 3 : 2;
  return v.x < h ? 2 : 1;
}

std::vector<Vertex> neighbors(const CombSpec& spec, Vertex v) {
  require_admissible(spec, v);
  const Coord h = spec.tooth_height(v.n);
  std::vector<Vertex> out;
  out.reserve(3);
  if (v.x == 0) {
    out.push_back({v.n - 1, 0});
    if (h > 0) out.push_back({v.n, 1});
    out.push_back({v.n + 1, 0});
  } else {
    out.push_back({v.n, v.x - 1});
    if (v.x < h) out.push_back({v.n, v.x + 1});
  }
  return out;
}

Coord distance(const CombSpec& spec, Vertex u, Vertex v) {
  require_admissible(spec, u);
  require_admissible(spec, v);
  return tree_distance(u, v);
}

Ball ball(const CombSpec& spec, Vertex center, Coord r) {
  require_admissible(spec, center);
  if (r < 0) throw DomainError("ball radius must be non-negative");
  Ball b;
  b.center = center;
  b.radius = r;
  const Coord reach = r - center.x;  // backbone columns reachable at offset <= reach
  for (Coord m = center.n - std::max<Coord>(reach, 0); m <= center.n + std::max<Coord>(reach, 0); ++m) {
    const Coord h = spec.tooth_height(m);
    if (m == center.n) {
      const Coord lo = std::max<Coord>(0, center.x - r);
      const Coord hi = std::min(h, center.x + r);
      for (Coord x = lo; x <= hi; ++x) b.members.push_back({m, x});
    } else {
      const Coord hi = std::min(h, reach - abs_coord(m - center.n));
      for (Coord x = 0; x <= hi; ++x) b.members.push_back({m, x});
    }
  }
  return b;
}

Coord volume(const CombSpec& spec, Vertex center, Coord r) {
  require_admissible(spec, center);
  if (r < 0) throw DomainError("ball radius must be non-negative");
  const Coord h0 = spec.tooth_height(center.n);
  Coord total = std::min(h0, center.x + r) - std::max<Coord>(0, center.x - r) + 1;
  const Coord reach = r - center.x;
  for (Coord k = 1; k <= reach; ++k) {
    for (Coord m : {center.n - k, center.n + k}) {
      total += std::min(spec.tooth_height(m), reach - k) + 1;
    }
  }
  return total;
}

Coord volume_witness_lower_bound(const CombSpec& spec, Vertex center, Coord r) {
  require_admissible(spec, center);
  if (center.n < 0) throw DomainError("volume witness needs a center with n >= 0");
  if (r < center.x) throw DomainError("volume witness needs r >= height of the center");
  Coord total = 0;
  for (Coord y = center.n + 1; y <= center.n + r - center.x; ++y) {
    total += std::min(spec.tooth_height(y), r - center.x - y + center.n);
  }
  return total;
}

std::vector<Vertex> strip_members(const CombSpec& spec, Strip strip) {
  std::vector<Vertex> out;
  for (Coord m = -strip.N; m <= strip.N; ++m) {
    const Coord h = spec.tooth_height(m);
    for (Coord x = 0; x <= h; ++x) out.push_back({m, x});
  }
  return out;
}

HeightTable::HeightTable(const CombSpec& spec, Coord radius) : spec_(spec), radius_(std::max<Coord>(radius, 0)) {
  heights_.resize(static_cast<std::size_t>(2 * radius_ + 1));
  if (spec.symmetric()) {
    for (Coord m = 0; m <= radius_; ++m) {
      const Coord h = spec.tooth_height(m);
      heights_[static_cast<std::size_t>(radius_ + m)] = h;
      heights_[static_cast<std::size_t>(radius_ - m)] = h;
    }
  } else {
    for (Coord m = -radius_; m <= radius_; ++m) heights_[static_cast<std::size_t>(m + radius_)] = spec.tooth_height(m);
  }
}

}  // namespace comb
