#include "combcollide/walk_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "combcollide/errors.hpp"

namespace comb {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One step of a walker, choosing uniformly among the canonical neighbor list.
template <class Rng>
inline void step_walker(Vertex& v, Coord height, Rng& rng) {
  if (v.x == 0) {
    const std::uint64_t deg = height > 0 ? 3 : 2;
    const auto i = static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * deg) >> 64);
    if (i == 0) {
      --v.n;
    } else if (i + 1 == deg) {
      ++v.n;
    } else {
      v.x = 1;
    }
  } else if (v.x == height) {
    --v.x;
  } else {
    v.x += (rng() >> 63) ? 1 : -1;
  }
}

// Membership test for S, stored as a per-column l range.
struct H1Region {
  Coord w_lo = 1;
  Coord w_hi = 0;
  std::vector<std::pair<Coord, Coord>> rows;

  static H1Region build(const CombSpec& spec, const RegionConstants& rc) {
    H1Region r;
    std::vector<Vertex> s;
    try {
      s = h1_target(spec, rc);
    } catch (const EmptyTargetRegion&) {
      return r;
    }
    r.w_lo = s.front().n;
    r.w_hi = s.back().n;
    r.rows.assign(static_cast<std::size_t>(r.w_hi - r.w_lo + 1), {1, 0});
    for (const Vertex& v : s) {
      auto& row = r.rows[static_cast<std::size_t>(v.n - r.w_lo)];
      if (row.first > row.second) {
        row = {v.x, v.x};
      } else {
        row.first = std::min(row.first, v.x);
        row.second = std::max(row.second, v.x);
      }
    }
    return r;
  }

  bool contains(Vertex v) const {
    if (v.n < w_lo || v.n > w_hi) return false;
    const auto& row = rows[static_cast<std::size_t>(v.n - w_lo)];
    return v.x >= row.first && v.x <= row.second;
  }
};

void validate(const SimConfig& c) {
  if (c.starts.empty()) throw DomainError("at least one walker is required");
  if (c.horizon < 0) throw DomainError("horizon must be non-negative");
  if (c.rc.N < 1) throw DomainError("N must be positive");
  if (c.rc.h < 2) throw DomainError("strip multiplier h must be at least 2");
  if (c.replicas < 0) throw DomainError("replica count must be non-negative");
  for (const Vertex& v : c.starts) require_admissible(c.spec, v);
}

Coord table_radius(const SimConfig& c, std::int64_t horizon) {
  Coord far = 0;
  for (const Vertex& v : c.starts) far = std::max(far, v.n < 0 ? -v.n : v.n);
  const Coord want = std::max<Coord>(Coord{1} << 16, 2 * c.rc.h * c.rc.N);
  return std::min<Coord>(want, far + horizon + 1);
}

struct Prepared {
  HeightTable heights;
  H1Region s;
  std::int64_t T1;
  std::int64_t T2;
};

Prepared prepare(const SimConfig& c) {
  return Prepared{HeightTable(c.spec, table_radius(c, c.horizon)), H1Region::build(c.spec, c.rc), t1(c.spec, c.rc),
                  t2(c.spec, c.rc)};
}

RunRecord run(const SimConfig& c, const Prepared& prep, std::int64_t replica_id) {
  RunRecord rec;
  rec.replica_id = replica_id;
  rec.seed = replica_seed(c.master_seed, replica_id);
  std::mt19937_64 rng(rec.seed);

  const std::size_t k = c.starts.size();
  const bool collisions = k >= 2;
  const Coord hN = c.rc.h * c.rc.N;
  const Coord half = c.rc.N;  // annulus is N/2 < |n| <= 2N, tested as 2|n| > N
  std::vector<Vertex> pos = c.starts;
  rec.theta_walker.assign(k, std::nullopt);
  rec.checkpoint_C.assign(c.checkpoints.size(), 0);
  rec.checkpoint_last.assign(c.checkpoints.size(), std::nullopt);

  auto all_equal = [&] {
    for (std::size_t i = 1; i < k; ++i) {
      if (pos[i] != pos[0]) return false;
    }
    return true;
  };
  std::size_t exited = 0;
  auto check_exits = [&](std::int64_t n) {
    for (std::size_t i = 0; i < k; ++i) {
      if (!rec.theta_walker[i] && !Strip{hN}.contains(pos[i])) {
        rec.theta_walker[i] = n;
        ++exited;
        if (!rec.theta || n < *rec.theta) rec.theta = n;
      }
    }
  };
  // checkpoints are processed in time order through a sorted index
  std::vector<std::size_t> order(c.checkpoints.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.checkpoints[a] < c.checkpoints[b]; });
  std::size_t next_cp = 0;
  auto flush_checkpoints = [&](std::int64_t n) {
    while (next_cp < order.size() && c.checkpoints[order[next_cp]] <= n) {
      rec.checkpoint_C[order[next_cp]] = rec.C;
      rec.checkpoint_last[order[next_cp]] = rec.last_collision;
      ++next_cp;
    }
  };

  check_exits(0);
  if (collisions && all_equal()) {
    rec.sigma = 0;
    rec.collision_times.push_back(0);
  }
  if (c.probe_time && *c.probe_time == 0) rec.probe_collision = collisions && all_equal();
  flush_checkpoints(0);

  const std::int64_t h1_end = std::min(prep.T1, c.horizon);
  const std::int64_t h2_end = std::min(prep.T2, c.horizon);
  for (std::int64_t n = 1; n <= c.horizon; ++n) {
    for (Vertex& v : pos) step_walker(v, prep.heights(v.n), rng);
    if (exited < k) check_exits(n);
    if (collisions && all_equal()) {
      ++rec.C;
      rec.last_collision = n;
      if (!rec.sigma) rec.sigma = n;
      if (rec.collision_times.size() < c.max_collision_times) rec.collision_times.push_back(n);
      if (!rec.theta) {
        ++rec.HN;
        if (n <= h1_end && prep.s.contains(pos[0])) ++rec.H1;
        const Coord a = pos[0].n < 0 ? -pos[0].n : pos[0].n;
        if (n <= h2_end && 2 * a > half && a <= 2 * c.rc.N) ++rec.H2;
      }
    }
    if (c.probe_time && *c.probe_time == n) rec.probe_collision = collisions && all_equal();
    if (next_cp < order.size() && c.checkpoints[order[next_cp]] <= n) flush_checkpoints(n);
  }
  // checkpoints beyond the horizon see the final counts
  while (next_cp < order.size()) {
    rec.checkpoint_C[order[next_cp]] = rec.C;
    rec.checkpoint_last[order[next_cp]] = rec.last_collision;
    ++next_cp;
  }
  rec.final_positions = pos;
  return rec;
}

// Runs f(i) for i in [0, count) on `jobs` threads and hands the results to
// `sink` in index order on the calling thread.
template <class R, class F, class Sink>
void ordered_parallel(std::int64_t count, unsigned jobs, F&& f, Sink&& sink) {
  jobs = std::max(1u, jobs);
  if (jobs == 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) sink(f(i));
    return;
  }
  std::vector<std::optional<R>> slots(static_cast<std::size_t>(count));
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::int64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        R r = f(i);
        std::lock_guard<std::mutex> lock(mu);
        slots[static_cast<std::size_t>(i)] = std::move(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        stop = true;
      }
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::int64_t>(jobs, count); ++t) pool.emplace_back(worker);

  std::exception_ptr sink_error;
  for (std::int64_t i = 0; i < count; ++i) {
    std::optional<R> r;
    {
      std::unique_lock<std::mutex> lock(mu);
      cv.wait(lock, [&] { return slots[static_cast<std::size_t>(i)].has_value() || error; });
      if (error) break;
      r = std::move(slots[static_cast<std::size_t>(i)]);
      slots[static_cast<std::size_t>(i)].reset();
    }
    try {
      sink(std::move(*r));
    } catch (...) {
      sink_error = std::current_exception();
      stop = true;
      break;
    }
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  if (sink_error) std::rethrow_exception(sink_error);
}

}  // namespace

std::int64_t default_horizon(const CombSpec& spec, Coord N) {
  return static_cast<std::int64_t>(std::ceil(2.0 * diffusive_scale(spec, N) - 1e-9));
}

std::uint64_t replica_seed(std::uint64_t master_seed, std::int64_t replica_id) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(static_cast<std::uint64_t>(replica_id) + 0x632be59bd9b4e019ULL));
}

RunRecord simulate_replica(const SimConfig& config, std::int64_t replica_id) {
  validate(config);
  return run(config, prepare(config), replica_id);
}

std::vector<RunRecord> simulate(const SimConfig& config, unsigned jobs,
                                const std::function<void(const RunRecord&)>& on_record) {
  validate(config);
  const Prepared prep = prepare(config);
  std::vector<RunRecord> out;
  out.reserve(static_cast<std::size_t>(config.replicas));
  ordered_parallel<RunRecord>(
      config.replicas, jobs, [&](std::int64_t i) { return run(config, prep, i); },
      [&](RunRecord r) {
        if (on_record) on_record(r);
        out.push_back(std::move(r));
      });
  return out;
}

Estimate estimate(const std::vector<double>& samples) {
  if (samples.size() < 2) throw DomainError("an estimate needs at least two samples");
  const auto n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  Estimate e;
  e.mean = mean;
  e.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  e.replicas = static_cast<std::int64_t>(samples.size());
  e.ci95 = 1.96 * e.std_error;
  return e;
}

Estimate estimate_first_meeting_prob(const SimConfig& config, unsigned jobs) {
  std::vector<double> hits;
  hits.reserve(static_cast<std::size_t>(config.replicas));
  simulate(config, jobs, [&](const RunRecord& r) { hits.push_back(r.H1 >= 1 ? 1.0 : 0.0); });
  return estimate(hits);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, values.size() - 1);
  const double f = pos - static_cast<double>(i);
  return values[i] + f * (values[j] - values[i]);
}

double growth_denominator(const CombSpec& spec, std::int64_t N) {
  const double n = static_cast<double>(N);
  const double a = spec.log_pow(n, 1.0 - spec.alpha());
  const double b = std::log(std::log(n));
  return std::max({a, b, 1e-6});
}

std::vector<GrowthRow> growth_statistic(const SimConfig& config, const std::vector<std::int64_t>& N_grid,
                                        unsigned jobs) {
  if (N_grid.empty()) throw DomainError("growth grid is empty");
  for (std::int64_t N : N_grid) {
    if (N < 16) throw DomainError("growth grid is restricted to N >= 16");
  }
  SimConfig c = config;
  c.horizon = *std::max_element(N_grid.begin(), N_grid.end());
  c.checkpoints = N_grid;
  std::vector<GrowthRow> rows(N_grid.size());
  for (std::size_t i = 0; i < N_grid.size(); ++i) {
    rows[i].N = N_grid[i];
    rows[i].denominator = growth_denominator(c.spec, N_grid[i]);
  }
  simulate(c, jobs, [&](const RunRecord& r) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i].statistic.push_back(static_cast<double>(r.checkpoint_C[i]) / rows[i].denominator);
    }
  });
  for (GrowthRow& row : rows) {
    if (row.statistic.empty()) continue;
    row.median = quantile(row.statistic, 0.5);
    row.q25 = quantile(row.statistic, 0.25);
    row.q75 = quantile(row.statistic, 0.75);
  }
  return rows;
}

std::vector<ExitRow> exit_time_stats(const SimConfig& config, const std::vector<Coord>& N_grid,
                                     std::int64_t max_steps, unsigned jobs) {
  if (N_grid.empty()) throw DomainError("exit-time grid is empty");
  std::vector<ExitRow> out;
  for (Coord N : N_grid) {
    if (N < 1) throw DomainError("N must be positive");
    SimConfig c = config;
    c.rc.N = N;
    validate(c);
    const double n4 = std::pow(static_cast<double>(N), 4.0);
    ExitRow row;
    row.N = N;
    row.cap = static_cast<std::int64_t>(std::min(n4, static_cast<double>(max_steps)));
    const Coord hN = c.rc.h * N;
    const HeightTable heights(c.spec, std::min<Coord>(hN + 2, table_radius(c, row.cap)));
    ordered_parallel<std::int64_t>(
        c.replicas, jobs,
        [&](std::int64_t id) {
          std::mt19937_64 rng(replica_seed(c.master_seed, id));
          std::vector<Vertex> pos = c.starts;
          for (const Vertex& v : pos) {
            if (!Strip{hN}.contains(v)) return std::int64_t{0};
          }
          for (std::int64_t t = 1; t <= row.cap; ++t) {
            for (Vertex& v : pos) {
              step_walker(v, heights(v.n), rng);
              if (!Strip{hN}.contains(v)) return t;
            }
          }
          return row.cap + 1;  // censored
        },
        [&](std::int64_t t) { row.theta.push_back(t); });
    std::vector<double> th;
    for (std::int64_t t : row.theta) {
      if (t > row.cap) ++row.censored;
      if (static_cast<double>(t) > n4) row.fraction_above_N4 += 1.0;
      th.push_back(static_cast<double>(t));
    }
    if (!th.empty()) {
      row.fraction_above_N4 /= static_cast<double>(th.size());
      row.median = quantile(th, 0.5);
      row.q10 = quantile(th, 0.1);
      row.q90 = quantile(th, 0.9);
      const double scale = diffusive_scale(c.spec, std::max<Coord>(N, 2));
      row.median_ratio = row.median / scale;
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace comb
