#pragma once

#include <cohset/coherence.hpp>
#include <cohset/fokker_planck.hpp>
#include <cohset/grid.hpp>
#include <cohset/ulam.hpp>
#include <cohset/vorticity.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohset {

inline constexpr int kConfigVersion = 1;

/// Invalid or inconsistent configuration. `path` names a missing file when
/// that is the cause.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg, std::string path = {})
      : std::runtime_error(msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct FlowSpec {
  std::string type = "quadruple_gyre";  // quadruple_gyre | octuple_gyre | uniform | gridded | navier_stokes
  double delta = 0.25;
  double omega = 2.0 * std::numbers::pi;
  Velocity velocity{0.0, 0.0, 0.0};
  int dim = 2;                          // uniform only
  std::vector<double> lengths;          // uniform only
  std::filesystem::path path;           // gridded only
  // navier_stokes
  std::string ic = "three_vortex";      // three_vortex | random | zero
  std::uint64_t seed = 0;
  int points = 64;
  NsConfig ns;
};

struct FpSpec {
  FpConfig cfg;
  int singular_values = 5;
};

struct UlamSpec {
  int boxes_per_axis = 32;
  UlamOptions opt;
  int singular_values = 5;
};

struct ExtractionSpec {
  std::string method = "threshold";  // threshold | line_search | kmeans
  std::string source = "fp";         // fp | ulam
  double theta = 0.0;
  int k = 4;
  int vectors = 4;
  std::uint64_t seed = 0;
  int restarts = 10;
};

struct SdeSpec {
  SdeRun run;
  std::optional<double> epsilon;  // defaults to fp.epsilon
  std::optional<double> t0, t1;   // default to the fp window
  bool halving_check = true;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::string name;
  FlowSpec flow;
  std::optional<FourierGrid> grid;
  std::optional<FpSpec> fp;
  std::optional<UlamSpec> ulam;
  std::optional<ExtractionSpec> extraction;
  std::optional<SdeSpec> sde;
  int plot_points = 0;  // 0: the grid's collocation points
  std::optional<std::filesystem::path> output_dir;
  nlohmann::json raw;

  int plot_resolution() const { return plot_points > 0 ? plot_points : (grid ? grid->points : 0); }
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
  }
}

template <class T>
T get_req(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + where);
  return get_or<T>(j, key, where, T{});
}

inline FlowSpec parse_flow(const nlohmann::json& j, const std::filesystem::path& base) {
  FlowSpec f;
  f.type = get_req<std::string>(j, "type", "flow");
  if (f.type == "quadruple_gyre" || f.type == "octuple_gyre") {
    require_keys(j, "flow", {"type", "delta", "omega"});
    f.delta = get_or(j, "delta", "flow", f.delta);
    f.omega = get_or(j, "omega", "flow", f.omega);
  } else if (f.type == "uniform") {
    require_keys(j, "flow", {"type", "dim", "lengths", "velocity"});
    f.dim = get_req<int>(j, "dim", "flow");
    f.lengths = get_req<std::vector<double>>(j, "lengths", "flow");
    const auto v = get_or(j, "velocity", "flow", std::vector<double>(static_cast<std::size_t>(f.dim), 0.0));
    if (v.size() != static_cast<std::size_t>(f.dim) || f.lengths.size() != static_cast<std::size_t>(f.dim))
      throw ConfigError("uniform flow needs dim lengths and dim velocity components");
    for (int a = 0; a < f.dim; ++a) f.velocity[a] = v[a];
  } else if (f.type == "gridded") {
    require_keys(j, "flow", {"type", "path"});
    f.path = get_req<std::string>(j, "path", "flow");
    if (f.path.is_relative()) f.path = base / f.path;
    if (!std::filesystem::exists(f.path)) throw ConfigError("flow file not found: " + f.path.string(), f.path.string());
  } else if (f.type == "navier_stokes") {
    require_keys(j, "flow", {"type", "ic", "seed", "points", "nu", "t_start", "t_end", "steps", "snapshot_every",
                             "work_points"});
    f.ic = get_or<std::string>(j, "ic", "flow", f.ic);
    if (f.ic != "three_vortex" && f.ic != "random" && f.ic != "zero") throw ConfigError("unknown initial condition " + f.ic);
    f.seed = get_or(j, "seed", "flow", f.seed);
    f.points = get_or(j, "points", "flow", f.points);
    f.ns.nu = get_or(j, "nu", "flow", f.ns.nu);
    f.ns.t_start = get_or(j, "t_start", "flow", f.ns.t_start);
    f.ns.t_end = get_or(j, "t_end", "flow", f.ns.t_end);
    f.ns.steps = get_or(j, "steps", "flow", f.ns.steps);
    f.ns.snapshot_every = get_or(j, "snapshot_every", "flow", f.ns.snapshot_every);
    f.ns.work_points = get_or(j, "work_points", "flow", f.ns.work_points);
    if (f.points < 3) throw ConfigError("navier_stokes flow needs at least 3 points per axis");
    try {
      f.ns.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("flow: ") + e.what());
    }
  } else {
    throw ConfigError("unknown flow type '" + f.type + "'");
  }
  return f;
}

inline TimeScheme parse_scheme(const std::string& s) {
  if (s == "etdrk4") return TimeScheme::etdrk4;
  if (s == "rk4") return TimeScheme::rk4;
  throw ConfigError("unknown time scheme '" + s + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  using namespace detail;
  require_keys(j, "config", {"version", "name", "flow", "grid", "fp", "ulam", "extraction", "sde", "output"});
  ExperimentConfig c;
  c.raw = j;
  c.version = get_req<int>(j, "version", "config");
  if (c.version != kConfigVersion)
    throw ConfigError("unsupported config version " + std::to_string(c.version) + " (expected " +
                      std::to_string(kConfigVersion) + ")");
  c.name = get_or<std::string>(j, "name", "config", "experiment");
  if (!j.contains("flow")) throw ConfigError("missing key 'flow' in config");
  c.flow = parse_flow(j.at("flow"), base_dir);

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    require_keys(g, "grid", {"dim", "modes", "points", "lengths"});
    try {
      c.grid = FourierGrid::make(get_req<int>(g, "dim", "grid"), get_req<int>(g, "modes", "grid"),
                                 get_req<int>(g, "points", "grid"), get_req<std::vector<double>>(g, "lengths", "grid"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
  }
  if (j.contains("fp")) {
    const auto& f = j.at("fp");
    require_keys(f, "fp", {"epsilon", "t0", "t1", "steps", "scheme", "contour_points", "contour_radius",
                           "solenoidal_projection", "dealias", "singular_values"});
    FpSpec s;
    s.cfg.epsilon = get_req<double>(f, "epsilon", "fp");
    s.cfg.t0 = get_or(f, "t0", "fp", s.cfg.t0);
    s.cfg.t1 = get_req<double>(f, "t1", "fp");
    s.cfg.steps = get_req<int>(f, "steps", "fp");
    s.cfg.scheme = parse_scheme(get_or<std::string>(f, "scheme", "fp", "etdrk4"));
    s.cfg.contour_points = get_or(f, "contour_points", "fp", s.cfg.contour_points);
    s.cfg.contour_radius = get_or(f, "contour_radius", "fp", s.cfg.contour_radius);
    s.cfg.solenoidal_projection = get_or(f, "solenoidal_projection", "fp", s.cfg.solenoidal_projection);
    const auto dealias = get_or<std::string>(f, "dealias", "fp", "none");
    if (dealias == "two_thirds") s.cfg.dealias = Dealias::two_thirds;
    else if (dealias != "none") throw ConfigError("unknown dealias mode '" + dealias + "'");
    s.singular_values = get_or(f, "singular_values", "fp", s.singular_values);
    try {
      s.cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("fp: ") + e.what());
    }
    if (!c.grid) throw ConfigError("fp section needs a grid section");
    if (s.singular_values < 1) throw ConfigError("fp.singular_values must be >= 1");
    c.fp = s;
  }
  if (j.contains("ulam")) {
    const auto& u = j.at("ulam");
    require_keys(u, "ulam", {"boxes_per_axis", "samples_per_box", "t0", "t1", "h_traj", "seed", "layout",
                             "singular_values"});
    UlamSpec s;
    s.boxes_per_axis = get_or(u, "boxes_per_axis", "ulam", s.boxes_per_axis);
    s.opt.samples_per_box = get_or(u, "samples_per_box", "ulam", s.opt.samples_per_box);
    s.opt.t0 = get_req<double>(u, "t0", "ulam");
    s.opt.t1 = get_req<double>(u, "t1", "ulam");
    s.opt.h_traj = get_or(u, "h_traj", "ulam", s.opt.h_traj);
    s.opt.seed = get_or(u, "seed", "ulam", s.opt.seed);
    const auto layout = get_or<std::string>(u, "layout", "ulam", "random");
    if (layout == "regular") s.opt.layout = SampleLayout::regular;
    else if (layout != "random") throw ConfigError("unknown sample layout '" + layout + "'");
    s.singular_values = get_or(u, "singular_values", "ulam", s.singular_values);
    if (s.boxes_per_axis < 1 || s.opt.samples_per_box < 1 || !(s.opt.h_traj > 0.0) || s.singular_values < 1)
      throw ConfigError("ulam: boxes, samples, h_traj and singular_values must be positive");
    c.ulam = s;
  }
  if (j.contains("extraction")) {
    const auto& e = j.at("extraction");
    require_keys(e, "extraction", {"method", "source", "theta", "k", "vectors", "seed", "restarts"});
    ExtractionSpec s;
    s.method = get_or<std::string>(e, "method", "extraction", s.method);
    s.source = get_or<std::string>(e, "source", "extraction", s.source);
    s.theta = get_or(e, "theta", "extraction", s.theta);
    s.k = get_or(e, "k", "extraction", s.k);
    s.vectors = get_or(e, "vectors", "extraction", s.vectors);
    s.seed = get_or(e, "seed", "extraction", s.seed);
    s.restarts = get_or(e, "restarts", "extraction", s.restarts);
    if (s.method != "threshold" && s.method != "line_search" && s.method != "kmeans")
      throw ConfigError("unknown extraction method '" + s.method + "'");
    if (s.source != "fp" && s.source != "ulam") throw ConfigError("extraction.source must be fp or ulam");
    if (s.method == "kmeans" && (s.k < 2 || s.vectors < 1)) throw ConfigError("kmeans needs k >= 2 and vectors >= 1");
    c.extraction = s;
  }
  if (j.contains("sde")) {
    const auto& s = j.at("sde");
    require_keys(s, "sde", {"particles", "dt", "seed", "batch", "epsilon", "t0", "t1", "halving_check"});
    SdeSpec d;
    d.run.particles = get_or(s, "particles", "sde", d.run.particles);
    d.run.dt = get_or(s, "dt", "sde", d.run.dt);
    d.run.seed = get_or(s, "seed", "sde", d.run.seed);
    d.run.batch = get_or(s, "batch", "sde", d.run.batch);
    if (s.contains("epsilon")) d.epsilon = get_req<double>(s, "epsilon", "sde");
    if (s.contains("t0")) d.t0 = get_req<double>(s, "t0", "sde");
    if (s.contains("t1")) d.t1 = get_req<double>(s, "t1", "sde");
    d.halving_check = get_or(s, "halving_check", "sde", d.halving_check);
    if (!(d.run.dt > 0.0) || d.run.particles == 0 || d.run.batch == 0)
      throw ConfigError("sde: dt, particles and batch must be positive");
    if (!d.epsilon && !c.fp) throw ConfigError("sde.epsilon is required without an fp section");
    if ((!d.t0 || !d.t1) && !c.fp) throw ConfigError("sde.t0 and sde.t1 are required without an fp section");
    c.sde = d;
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    require_keys(o, "output", {"directory", "plot_points"});
    c.plot_points = get_or(o, "plot_points", "output", 0);
    if (o.contains("directory")) {
      std::filesystem::path p = get_req<std::string>(o, "directory", "output");
      c.output_dir = p.is_relative() ? base_dir / p : p;
    }
    if (c.plot_points < 0) throw ConfigError("output.plot_points must be >= 0");
    if (c.plot_points > 0 && c.grid && c.plot_points < c.grid->modes)
      throw ConfigError("output.plot_points must be >= grid.modes");
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string(), path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace cohset
