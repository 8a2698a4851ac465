#pragma once

#include <cohset/coherence.hpp>
#include <cohset/config.hpp>
#include <cohset/flow_io.hpp>
#include <cohset/io.hpp>
#include <cohset/transfer.hpp>
#include <cohset/ulam.hpp>
#include <cohset/vorticity.hpp>

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace cohset {

inline constexpr int kMetadataSchema = 1;

namespace fs = std::filesystem;

namespace detail {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing input " + path.string(), path.string());
  return nlohmann::json::parse(in);
}

inline void require_file(const fs::path& p, const std::string& hint) {
  if (!fs::exists(p)) throw ConfigError("missing input " + p.string() + " (" + hint + ")", p.string());
}

inline nlohmann::json header(const ExperimentConfig& cfg, const std::string& command) {
  nlohmann::json m;
  m["schema_version"] = kMetadataSchema;
  m["command"] = command;
  m["name"] = cfg.name;
  m["config"] = cfg.raw;
  return m;
}

inline nlohmann::json grid_json(const FourierGrid& g) {
  return {{"dim", g.dim},
          {"modes", g.modes},
          {"points", g.points},
          {"lengths", std::vector<double>(g.lengths.begin(), g.lengths.begin() + g.dim)}};
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline void write_field(const RealField& f, const fs::path& out, const std::string& stem, double offset = 0.0) {
  write_csv_grid(f, (out / (stem + ".csv")).string(), offset);
  write_pgm(f, (out / (stem + ".pgm")).string());
}

inline RealField mask_field(const FourierGrid& g, const Mask& m) {
  auto f = RealField::zeros(g);
  for (std::size_t i = 0; i < m.size(); ++i) f.values[i] = m[i];
  return f;
}

inline Mask field_mask(const RealField& f) {
  Mask m(f.values.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = f.values[i] > 0.5 ? 1 : 0;
  return m;
}

/// One value per box as a field on the box grid (nodes at lower corners;
/// CSV output shifts them to box centres).
inline RealField box_field(const BoxPartition& part, const Eigen::Ref<const Eigen::VectorXd>& v) {
  const auto g = FourierGrid::make(part.dim, 1, part.boxes_per_axis,
                                   std::span<const double>(part.lengths.data(), static_cast<std::size_t>(part.dim)));
  auto f = RealField::zeros(g);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = v[static_cast<Eigen::Index>(i)];
  return f;
}

}  // namespace detail

/// The configured velocity field. Navier-Stokes flows are read from the
/// run-ns output in `out`.
inline std::shared_ptr<const VelocityField> make_flow(const ExperimentConfig& cfg, const fs::path& out) {
  const auto& f = cfg.flow;
  if (f.type == "quadruple_gyre") return std::make_shared<QuadrupleGyre>(f.delta, f.omega);
  if (f.type == "octuple_gyre") return std::make_shared<OctupleGyre>(f.delta, f.omega);
  if (f.type == "uniform") {
    std::array<double, kMaxDim> L{1.0, 1.0, 1.0};
    for (int a = 0; a < f.dim; ++a) L[a] = f.lengths[a];
    return std::make_shared<UniformFlow>(f.dim, L, f.velocity);
  }
  fs::path path = f.path;
  if (f.type == "navier_stokes") {
    path = out / "flow.cohflow";
    detail::require_file(path, "run run-ns with this config first");
  }
  detail::require_file(path, "gridded flow file");
  return read_gridded_flow(path.string());
}

namespace detail {

inline void check_flow_grid(const VelocityField& flow, const FourierGrid& g) {
  if (flow.dim() != g.dim) throw ConfigError("grid dimension does not match the flow");
  const auto L = flow.lengths();
  for (int a = 0; a < g.dim; ++a)
    if (std::abs(L[a] - g.lengths[a]) > 1e-12 * L[a]) throw ConfigError("grid lengths do not match the flow domain");
}

}  // namespace detail

namespace detail {

// An ETDRK4 step too long for the advection speed amplifies instead of
// failing outright, so flag it here.
inline nlohmann::json fp_warnings(double sigma1, double const_dev) {
  auto w = nlohmann::json::array();
  char buf[160];
  if (sigma1 > 1.0 + 1e-6) {
    std::snprintf(buf, sizeof buf, "sigma_1 = %.6g exceeds 1: the time step is likely unstable, raise fp.steps", sigma1);
    w.push_back(buf);
  }
  if (const_dev > 1e-6) {
    std::snprintf(buf, sizeof buf, "constant is not preserved (deviation %.3g)", const_dev);
    w.push_back(buf);
  }
  return w;
}

}  // namespace detail

inline nlohmann::json run_fp(const ExperimentConfig& cfg, const fs::path& out, unsigned threads = 0) {
  if (!cfg.fp) throw ConfigError("run-fp needs an fp section");
  fs::create_directories(out);
  detail::Stopwatch clock;
  nlohmann::json timing;
  const auto flow = make_flow(cfg, out);
  const auto& grid = *cfg.grid;
  detail::check_flow_grid(*flow, grid);
  timing["flow_s"] = clock.lap();

  const auto P = assemble_transfer(grid, *flow, cfg.fp->cfg, threads);
  timing["assembly_s"] = clock.lap();
  write_transfer_matrix(P, (out / "transfer_matrix.bin").string());

  const Eigen::Index n = std::min<Eigen::Index>(cfg.fp->singular_values, std::min(P.rows(), P.cols()));
  const auto svd = singular_triples(P, n);
  timing["svd_s"] = clock.lap();

  // Image of the constant basis function relative to the constant.
  const double c = std::sqrt(grid.quad_weight() / grid.volume());
  double const_dev = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) const_dev = std::max(const_dev, std::abs(P.matrix(i, 0) / c - 1.0));

  const int plot = cfg.plot_resolution();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto tag = std::to_string(i + 1);
    detail::write_field(vector_to_field(grid, svd.right.col(i), plot), out, "v" + tag);
    detail::write_field(left_vector_to_field(grid, svd.left.col(i), plot), out, "u" + tag);
  }
  timing["write_s"] = clock.lap();

  auto m = detail::header(cfg, "run-fp");
  m["flow"] = flow->describe();
  m["grid"] = detail::grid_json(grid);
  m["matrix"] = {{"rows", P.rows()}, {"cols", P.cols()}, {"file", "transfer_matrix.bin"}};
  m["sigma"] = detail::to_std(svd.sigma);
  m["constant_deviation"] = const_dev;
  m["max_conjugate_asymmetry"] = P.max_asymmetry;
  m["plot_points"] = plot;
  m["warnings"] = detail::fp_warnings(svd.sigma[0], const_dev);
  detail::write_json(out / "metadata.json", m);
  detail::write_json(out / "timings.json", timing);
  return m;
}

inline nlohmann::json run_ulam(const ExperimentConfig& cfg, const fs::path& out, unsigned threads = 0) {
  if (!cfg.ulam) throw ConfigError("run-ulam needs a ulam section");
  fs::create_directories(out);
  detail::Stopwatch clock;
  nlohmann::json timing;
  const auto flow = make_flow(cfg, out);
  const BoxPartition part(flow->dim(), cfg.ulam->boxes_per_axis, flow->lengths());
  const auto T = ulam_matrix(*flow, part, cfg.ulam->opt, threads);
  timing["matrix_s"] = clock.lap();
  write_transition_matrix(T, (out / "transition_matrix.txt").string());

  const Eigen::Index n =
      std::min<Eigen::Index>(cfg.ulam->singular_values, static_cast<Eigen::Index>(part.box_count()));
  const auto svd = ulam_svd(T, n);
  timing["svd_s"] = clock.lap();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto tag = std::to_string(i + 1);
    detail::write_field(detail::box_field(part, svd.right.col(i)), out, "ulam_v" + tag, 0.5);
    detail::write_field(detail::box_field(part, svd.left.col(i)), out, "ulam_u" + tag, 0.5);
  }
  timing["write_s"] = clock.lap();

  auto m = detail::header(cfg, "run-ulam");
  m["flow"] = flow->describe();
  m["boxes"] = part.box_count();
  m["nonzeros"] = T.matrix.nonZeros();
  m["sigma"] = detail::to_std(svd.sigma);
  detail::write_json(out / "metadata_ulam.json", m);
  detail::write_json(out / "timings_ulam.json", timing);
  return m;
}

inline nlohmann::json run_ns(const ExperimentConfig& cfg, const fs::path& out) {
  const auto& f = cfg.flow;
  if (f.type != "navier_stokes") throw ConfigError("run-ns needs a flow of type navier_stokes");
  fs::create_directories(out);
  detail::Stopwatch clock;
  const double L = 2.0 * std::numbers::pi;
  const auto g = FourierGrid::make(2, 1, f.points, {L, L});
  RealField w0 = f.ic == "three_vortex" ? three_vortex_ic(g) : f.ic == "random" ? random_ic(g, f.seed) : RealField::zeros(g);
  write_pgm(w0, (out / "vorticity0.pgm").string());
  const auto res = ns_evolve(w0, f.ns);
  const double solve_s = clock.lap();
  write_gridded_flow(*res.flow, (out / "flow.cohflow").string());

  double uptick = 0.0, drift = 0.0;
  for (std::size_t i = 1; i < res.enstrophy.size(); ++i) {
    uptick = std::max(uptick, (res.enstrophy[i] - res.enstrophy[i - 1]) / std::max(res.enstrophy[i - 1], 1e-300));
    drift = std::max(drift, std::abs(res.mean_vorticity[i] - res.mean_vorticity[0]));
  }
  auto m = detail::header(cfg, "run-ns");
  m["snapshots"] = res.times.size();
  m["t_start"] = res.times.front();
  m["t_end"] = res.times.back();
  m["enstrophy"] = res.enstrophy;
  m["max_relative_enstrophy_increase"] = uptick;
  m["mean_vorticity_drift"] = drift;
  m["final_divergence_max"] = spectral_divergence_max(res.flow->snapshots().back());
  m["file"] = "flow.cohflow";
  detail::write_json(out / "metadata_ns.json", m);
  detail::write_json(out / "timings_ns.json", {{"solve_s", solve_s}, {"write_s", clock.lap()}});
  return m;
}

inline nlohmann::json extract(const ExperimentConfig& cfg, const fs::path& out) {
  const ExtractionSpec spec = cfg.extraction.value_or(ExtractionSpec{});
  fs::create_directories(out);
  const int need = spec.method == "kmeans" ? std::max(spec.vectors, 2) : 2;

  std::vector<RealField> right, left;
  Eigen::VectorXd sigma;
  NodalOperator op;
  CellAnchor anchor = CellAnchor::centered;
  // Keep the matrix alive for the operator closures.
  std::shared_ptr<TransferMatrix> P;
  std::shared_ptr<TransitionMatrix> T;
  if (spec.source == "fp") {
    const auto path = out / "transfer_matrix.bin";
    detail::require_file(path, "run run-fp first");
    P = std::make_shared<TransferMatrix>(read_transfer_matrix(path.string()));
    const auto svd = singular_triples(*P, need);
    sigma = svd.sigma;
    const int plot = cfg.plot_points > 0 ? cfg.plot_points : P->grid.points;
    for (int i = 0; i < need; ++i) {
      right.push_back(vector_to_field(P->grid, svd.right.col(i), plot));
      left.push_back(left_vector_to_field(P->grid, svd.left.col(i), plot));
    }
    op = nodal_operator(*P, P->grid.with_points(plot));
  } else {
    const auto path = out / "transition_matrix.txt";
    detail::require_file(path, "run run-ulam first");
    T = std::make_shared<TransitionMatrix>(read_transition_matrix(path.string()));
    const auto svd = ulam_svd(*T, need);
    sigma = svd.sigma;
    for (int i = 0; i < need; ++i) {
      right.push_back(detail::box_field(T->partition, svd.right.col(i)));
      left.push_back(detail::box_field(T->partition, svd.left.col(i)));
    }
    op = nodal_operator(*T);
    anchor = CellAnchor::lower_corner;
  }

  const double csv_offset = anchor == CellAnchor::lower_corner ? 0.5 : 0.0;
  auto m = detail::header(cfg, "extract");
  m["method"] = spec.method;
  m["source"] = spec.source;
  m["sigma"] = detail::to_std(sigma);
  if (spec.method == "kmeans") {
    const std::vector<RealField> feats(right.begin(), right.begin() + spec.vectors);
    const auto labels = kmeans_partition(feats, spec.k, spec.seed, spec.restarts);
    auto lf = RealField::zeros(feats.front().grid);
    std::vector<std::size_t> sizes(static_cast<std::size_t>(spec.k), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      lf.values[i] = labels[i];
      ++sizes[static_cast<std::size_t>(labels[i])];
    }
    write_csv_grid(lf, (out / "labels.csv").string(), csv_offset);
    write_pgm_labels(lf.grid, labels, spec.k, (out / "labels.pgm").string());
    m["k"] = spec.k;
    m["cluster_sizes"] = sizes;
    detail::write_json(out / "extraction.json", m);
    return m;
  }

  CoherentPair pair = spec.method == "threshold" ? threshold_pair(right[1], left[1], spec.theta)
                                                 : line_search_threshold(right[1], left[1], op);
  pair.anchor = anchor;
  pair.rho = coherence_ratio(op, pair);
  const auto a0 = detail::mask_field(pair.grid, pair.a0);
  const auto a1 = detail::mask_field(pair.grid, pair.a1);
  write_csv_grid(a0, (out / "a0.csv").string(), csv_offset);
  write_csv_grid(a1, (out / "a1.csv").string(), csv_offset);
  write_pgm_labels(pair.grid, std::vector<int>(pair.a0.begin(), pair.a0.end()), 2, (out / "a0.pgm").string());
  write_pgm_labels(pair.grid, std::vector<int>(pair.a1.begin(), pair.a1.end()), 2, (out / "a1.pgm").string());
  m["theta"] = pair.theta;
  m["rho"] = pair.rho;
  m["relaxation_bound_ok"] = pair.rho - 1.0 <= sigma[1] + 1e-6;
  m["volume_a0"] = pair.volume_a0();
  m["volume_a1"] = pair.volume_a1();
  m["anchor"] = anchor == CellAnchor::centered ? "centered" : "lower_corner";
  detail::write_json(out / "extraction.json", m);
  return m;
}

inline nlohmann::json validate_sde(const ExperimentConfig& cfg, const fs::path& out, unsigned threads = 0) {
  if (!cfg.sde) throw ConfigError("validate-sde needs an sde section");
  const auto& s = *cfg.sde;
  const auto info = detail::read_json(out / "extraction.json");
  detail::require_file(out / "a0.csv", "run extract with a threshold method first");
  detail::require_file(out / "a1.csv", "run extract with a threshold method first");
  CoherentPair pair;
  const auto a0 = read_csv_grid((out / "a0.csv").string());
  pair.grid = a0.grid;
  pair.a0 = detail::field_mask(a0);
  pair.a1 = detail::field_mask(read_csv_grid((out / "a1.csv").string()));
  pair.anchor = info.value("anchor", "centered") == "lower_corner" ? CellAnchor::lower_corner : CellAnchor::centered;
  pair.theta = info.value("theta", 0.0);

  const auto flow = make_flow(cfg, out);
  const double eps = s.epsilon.value_or(cfg.fp ? cfg.fp->cfg.epsilon : 0.0);
  const double t0 = s.t0.value_or(cfg.fp ? cfg.fp->cfg.t0 : 0.0);
  const double t1 = s.t1.value_or(cfg.fp ? cfg.fp->cfg.t1 : 0.0);
  detail::Stopwatch clock;
  const auto est = sde_kappa(*flow, eps, pair, s.run, t0, t1, threads);

  auto m = detail::header(cfg, "validate-sde");
  m["epsilon"] = eps;
  m["t0"] = t0;
  m["t1"] = t1;
  m["kappa"] = est.kappa;
  m["std_error"] = est.std_error;
  m["hits"] = est.hits;
  m["particles"] = est.particles;
  nlohmann::json timing{{"sde_s", clock.lap()}};
  if (s.halving_check) {
    SdeRun half = s.run;
    half.dt = 0.5 * s.run.dt;
    const auto e2 = sde_kappa(*flow, eps, pair, half, t0, t1, threads);
    const double tol = 3.0 * std::hypot(est.std_error, e2.std_error);
    m["halving"] = {{"dt", half.dt},
                    {"kappa", e2.kappa},
                    {"difference", e2.kappa - est.kappa},
                    {"within_3_sigma", std::abs(e2.kappa - est.kappa) <= tol}};
    timing["halving_s"] = clock.lap();
  }
  detail::write_json(out / "sde.json", m);
  detail::write_json(out / "timings_sde.json", timing);
  return m;
}

}  // namespace cohset
