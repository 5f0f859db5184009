#include "combcollide/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "combcollide/errors.hpp"

namespace comb {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("bad value for " + key + ": '" + text + "'");
  }
  return v;
}

Vertex parse_vertex(const std::string& key, const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw ConfigError("bad vertex for " + key + ": '" + text + "' (expected n:x)");
  return {parse_number<Coord>(key, parts[0]), parse_number<Coord>(key, parts[1])};
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_number<T>(key, item));
  return out;
}

std::string format_vertex(Vertex v) { return std::to_string(v.n) + ":" + std::to_string(v.x); }

template <class T>
std::string format_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(v[i]);
    } else if constexpr (std::is_same_v<T, Vertex>) {
      s += format_vertex(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

template <class T>
Field number(const char* key, T ExperimentConfig::*m) {
  return {key,
          [m](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*m);
            } else {
              return std::to_string(c.*m);
            }
          },
          [m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = parse_number<T>(k, v); }};
}

Field text(const char* key, std::string ExperimentConfig::*m) {
  return {key, [m](const ExperimentConfig& c) { return c.*m; },
          [m](ExperimentConfig& c, const std::string&, const std::string& v) { c.*m = trim(v); }};
}

template <class T>
Field list(const char* key, std::vector<T> ExperimentConfig::*m) {
  return {key, [m](const ExperimentConfig& c) { return format_list(c.*m); },
          [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
            if constexpr (std::is_same_v<T, Vertex>) {
              std::vector<Vertex> out;
              for (const auto& item : split(v, ',')) out.push_back(parse_vertex(k, item));
              c.*m = out;
            } else {
              c.*m = parse_list<T>(k, v);
            }
          }};
}

Field vertex(const char* key, Vertex ExperimentConfig::*m) {
  return {key, [m](const ExperimentConfig& c) { return format_vertex(c.*m); },
          [m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = parse_vertex(k, v); }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table{
      text("command", &C::command),
      text("family", &C::family),
      number("alpha", &C::alpha),
      list("alpha_grid", &C::alpha_grid),
      number("log_base", &C::log_base),
      list("custom_height", &C::custom_height),
      number("seed", &C::seed),
      number("jobs", &C::jobs),
      text("out", &C::out),
      number("N", &C::N),
      number("h", &C::h),
      number("eps", &C::eps),
      number("delta", &C::delta),
      number("c2", &C::c2),
      list("starts", &C::starts),
      number("horizon", &C::horizon),
      number("replicas", &C::replicas),
      number("max_collision_times", &C::max_collision_times),
      list("checkpoints", &C::checkpoints),
      text("mixed_parity", &C::mixed_parity),
      number("max_steps", &C::max_steps),
      list("N_grid", &C::N_grid),
      list("r_grid", &C::r_grid),
      list("L_grid", &C::L_grid),
      list("n_grid", &C::n_grid),
      text("bound", &C::bound),
      vertex("x", &C::x),
      vertex("y", &C::y),
      number("n", &C::n),
      number("radius", &C::radius),
      number("window_c1", &C::window_c1),
      number("window_c2", &C::window_c2),
      number("hk1d_eps", &C::hk1d_eps),
      number("hk1d_c1", &C::hk1d_c1),
      number("hk1d_c2", &C::hk1d_c2),
      number("trend_tolerance", &C::trend_tolerance),
      number("stability_factor", &C::stability_factor),
      number("work_limit", &C::work_limit),
      number("mc_replicas", &C::mc_replicas),
      number("lemma21_n_max", &C::lemma21_n_max),
      number("quad_n_max", &C::quad_n_max),
  };
  return table;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::pair<std::string, std::string>> to_pairs(const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(c));
  return out;
}

void set_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  for (const auto& f : fields()) {
    if (k == f.key) {
      f.set(c, k, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + k + "'");
}

ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base) {
  // output files carry a header block; everything below it is data
  const bool header_only = text.find("# config:") != std::string::npos;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = trim(line);
    if (body.rfind("# config:", 0) == 0) {
      body = trim(body.substr(9));
    } else if (header_only || body.empty() || body[0] == '#') {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    set_value(base, body.substr(0, eq), body.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config_text(s.str(), std::move(base));
}

std::vector<std::pair<std::string, std::string>> result_pairs(const ExperimentConfig& c) {
  auto pairs = to_pairs(c);
  std::erase_if(pairs, [](const auto& p) { return p.first == "jobs" || p.first == "out"; });
  return pairs;
}

std::string header_block(const ExperimentConfig& c, const std::string& prefix) {
  std::string s = prefix + "combcollide " + kVersion + "\n";
  for (const auto& [k, v] : result_pairs(c)) s += prefix + "config: " + k + " = " + v + "\n";
  return s;
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.family == "log" || c.family == "poly" || c.family == "custom", "family must be log, poly or custom");
  require(c.family != "custom" || !c.custom_height.empty(), "family custom needs custom_height");
  for (Coord v : c.custom_height) require(v >= 0, "custom_height entries must be non-negative");
  require(c.alpha > 0.0, "alpha must be positive");
  for (double a : c.alpha_grid) require(a > 0.0, "alpha_grid entries must be positive");
  require(c.log_base == 0.0 || (c.log_base > 1.0), "log_base must be 0 (natural) or greater than 1");
  require(c.jobs >= 1, "jobs must be at least 1");
  require(!c.out.empty(), "out must be set");
  require(c.N >= 1 && c.h >= 2, "need N >= 1 and h >= 2");
  require(c.eps > 0.0 && c.eps < 0.5, "eps must lie in (0, 1/2)");
  require(c.delta > 0.0 && c.c2 > 0.0, "delta and c2 must be positive");
  require(!c.starts.empty(), "starts must list at least one vertex");
  require(c.horizon >= 0 && c.replicas >= 0 && c.max_collision_times >= 0 && c.max_steps >= 1,
          "horizon, replicas and max_collision_times must be non-negative");
  require(c.mixed_parity == "warn" || c.mixed_parity == "reject" || c.mixed_parity == "ignore",
          "mixed_parity must be warn, reject or ignore");
  require(!c.alpha_grid.empty() && !c.N_grid.empty() && !c.r_grid.empty() && !c.L_grid.empty() && !c.n_grid.empty(),
          "grids must be nonempty");
  require(c.window_c1 > 0.0 && c.window_c1 < c.window_c2, "need 0 < window_c1 < window_c2");
  require(c.hk1d_eps > 0.0 && c.hk1d_eps < 0.5, "hk1d_eps must lie in (0, 1/2)");
  require(c.hk1d_c1 > 0.0 && c.hk1d_c2 > 0.0, "hk1d constants must be positive");
  require(c.trend_tolerance >= 0.0 && c.stability_factor >= 1.0, "bad trend tolerance or stability factor");
  require(c.mc_replicas >= 2, "mc_replicas must be at least 2");
}

CombSpec make_spec(const ExperimentConfig& c, double alpha) {
  if (c.family == "log") return CombSpec::log_comb(alpha, c.log_base);
  if (c.family == "poly") return CombSpec::poly_comb(alpha);
  if (c.family == "custom") {
    if (c.custom_height.empty()) throw ConfigError("family custom needs custom_height");
    const auto table = c.custom_height;
    return CombSpec::custom(
        [table](Coord n) {
          const auto i = static_cast<std::size_t>(n < 0 ? -n : n);
          return i < table.size() ? table[i] : table.back();
        },
        "custom heights " + format_list(table), true);
  }
  throw ConfigError("unknown family '" + c.family + "'");
}

RegionConstants region_constants(const ExperimentConfig& c) {
  RegionConstants rc;
  rc.N = c.N;
  rc.h = c.h;
  rc.eps = c.eps;
  rc.delta = c.delta;
  rc.c2 = c.c2;
  return rc;
}

BoundOptions bound_options(const ExperimentConfig& c) {
  BoundOptions o;
  o.trend_tolerance = c.trend_tolerance;
  o.stability_factor = c.stability_factor;
  o.h = c.h;
  o.c1 = c.window_c1;
  o.c2 = c.window_c2;
  o.hk1d_eps = c.hk1d_eps;
  o.hk1d_c1 = c.hk1d_c1;
  o.hk1d_c2 = c.hk1d_c2;
  o.work_limit = c.work_limit;
  o.rc = region_constants(c);
  o.mc_replicas = c.mc_replicas;
  o.seed = c.seed;
  o.jobs = c.jobs;
  return o;
}

SimConfig sim_config(const ExperimentConfig& c, double alpha) {
  SimConfig s;
  s.spec = make_spec(c, alpha);
  s.starts = c.starts;
  s.rc = region_constants(c);
  s.horizon = c.horizon > 0 ? c.horizon : default_horizon(s.spec, c.N);
  s.replicas = c.replicas;
  s.master_seed = c.seed;
  s.max_collision_times = static_cast<std::size_t>(c.max_collision_times);
  s.checkpoints = c.checkpoints;
  return s;
}

}  // namespace comb
