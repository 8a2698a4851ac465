#pragma once

#include <cohset/errors.hpp>
#include <cohset/flows.hpp>
#include <cohset/parallel.hpp>
#include <cohset/transfer.hpp>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohset {

/// Uniform periodic partition of the domain into boxes_per_axis^d boxes;
/// box indices are axis-0 fastest.
struct BoxPartition {
  int dim = 2;
  int boxes_per_axis = 1;
  std::array<double, kMaxDim> lengths{1.0, 1.0, 1.0};

  BoxPartition(int dim, int boxes_per_axis, std::array<double, kMaxDim> lengths)
      : dim(dim), boxes_per_axis(boxes_per_axis), lengths(lengths) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("partition dimension must be 1..3");
    if (boxes_per_axis < 1) throw std::invalid_argument("need at least one box per axis");
    for (int a = 0; a < dim; ++a)
      if (!(lengths[a] > 0.0)) throw std::invalid_argument("domain lengths must be positive");
  }

  std::size_t box_count() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(boxes_per_axis);
    return n;
  }

  double width(int axis) const { return lengths[axis] / boxes_per_axis; }

  MultiIndex multi_index(std::size_t box) const {
    MultiIndex m{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      m[a] = static_cast<int>(box % boxes_per_axis);
      box /= boxes_per_axis;
    }
    return m;
  }

  std::size_t flat(const MultiIndex& m) const {
    std::size_t f = 0;
    for (int a = dim - 1; a >= 0; --a) {
      int i = m[a] % boxes_per_axis;
      if (i < 0) i += boxes_per_axis;
      f = f * boxes_per_axis + static_cast<std::size_t>(i);
    }
    return f;
  }

  Point lower_corner(std::size_t box) const {
    const auto m = multi_index(box);
    Point p{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) p[a] = m[a] * width(a);
    return p;
  }

  /// Box containing x after periodic wrapping.
  std::size_t locate(const Point& x) const {
    MultiIndex m{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      double r = std::fmod(x[a], lengths[a]);
      if (r < 0.0) r += lengths[a];
      int i = static_cast<int>(std::floor(r / width(a)));
      m[a] = std::clamp(i, 0, boxes_per_axis - 1);
    }
    return flat(m);
  }
};

enum class SampleLayout { random, regular };

struct UlamOptions {
  int samples_per_box = 100;
  double t0 = 0.0;
  double t1 = 1.0;
  double h_traj = 0.01;
  std::uint64_t seed = 0;
  SampleLayout layout = SampleLayout::random;
};

/// Column-stochastic Ulam matrix: entry (j, i) = #{samples of box i that
/// land in box j} / K.
struct TransitionMatrix {
  Eigen::SparseMatrix<double> matrix;
  BoxPartition partition;
  UlamOptions options;
};

namespace detail {

inline std::vector<Point> box_samples(const BoxPartition& part, std::size_t box, const UlamOptions& opt) {
  const Point lo = part.lower_corner(box);
  std::vector<Point> pts(static_cast<std::size_t>(opt.samples_per_box));
  if (opt.layout == SampleLayout::regular) {
    const int per_axis = static_cast<int>(std::lround(std::pow(opt.samples_per_box, 1.0 / part.dim)));
    int total = 1;
    for (int a = 0; a < part.dim; ++a) total *= per_axis;
    if (total != opt.samples_per_box)
      throw std::invalid_argument("regular sampling needs a perfect power of the dimension as samples per box");
    for (std::size_t s = 0; s < pts.size(); ++s) {
      std::size_t rest = s;
      pts[s] = {0.0, 0.0, 0.0};
      for (int a = 0; a < part.dim; ++a) {
        const double off = (static_cast<double>(rest % per_axis) + 0.5) / per_axis;
        rest /= per_axis;
        pts[s][a] = lo[a] + off * part.width(a);
      }
    }
    return pts;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                    static_cast<std::uint32_t>(box), static_cast<std::uint32_t>(box >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& p : pts) {
    p = {0.0, 0.0, 0.0};
    for (int a = 0; a < part.dim; ++a) p[a] = lo[a] + unit(rng) * part.width(a);
  }
  return pts;
}

}  // namespace detail

/// Advance points from t0 to t1 with fixed-step RK4 (step count
/// ceil((t1-t0)/h), evenly spaced).
inline void integrate_rk4(const VelocityField& flow, std::vector<Point>& pts, double t0, double t1, double h_max) {
  if (!(h_max > 0.0)) throw std::invalid_argument("trajectory step must be positive");
  if (t1 == t0) return;
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t1 - t0) / h_max - 1e-9)));
  const double h = (t1 - t0) / steps;
  const int d = flow.dim();
  const std::size_t n = pts.size();
  std::vector<Point> stage(n);
  std::vector<Velocity> k1(n), k2(n), k3(n), k4(n);
  auto shifted = [&](const std::vector<Velocity>& k, double c) {
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a) stage[i][a] = pts[i][a] + c * k[i][a];
  };
  for (int s = 0; s < steps; ++s) {
    const double t = t0 + s * h;
    flow.eval_points(t, pts, k1);
    shifted(k1, 0.5 * h);
    flow.eval_points(t + 0.5 * h, stage, k2);
    shifted(k2, 0.5 * h);
    flow.eval_points(t + 0.5 * h, stage, k3);
    shifted(k3, h);
    flow.eval_points(t + h, stage, k4);
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a) pts[i][a] += h / 6.0 * (k1[i][a] + 2.0 * k2[i][a] + 2.0 * k3[i][a] + k4[i][a]);
  }
}

inline TransitionMatrix ulam_matrix(const VelocityField& flow, const BoxPartition& part, const UlamOptions& opt,
                                    unsigned threads = 0) {
  if (opt.samples_per_box < 1) throw std::invalid_argument("need at least one sample per box");
  if (flow.dim() != part.dim) throw std::invalid_argument("partition dimension does not match the flow");
  const std::size_t boxes = part.box_count();
  std::vector<std::vector<std::pair<std::size_t, int>>> counts(boxes);

  parallel_for(boxes, threads, [&](std::size_t box) {
    auto pts = detail::box_samples(part, box, opt);
    integrate_rk4(flow, pts, opt.t0, opt.t1, opt.h_traj);
    std::map<std::size_t, int> hits;
    for (const auto& p : pts) {
      for (int a = 0; a < part.dim; ++a)
        if (!std::isfinite(p[a])) throw NumericalError("non-finite trajectory from box " + std::to_string(box));
      ++hits[part.locate(p)];
    }
    counts[box].assign(hits.begin(), hits.end());
  });

  std::vector<Eigen::Triplet<double>> triplets;
  const double inv_k = 1.0 / opt.samples_per_box;
  for (std::size_t box = 0; box < boxes; ++box)
    for (const auto& [target, c] : counts[box])
      triplets.emplace_back(static_cast<int>(target), static_cast<int>(box), c * inv_k);
  TransitionMatrix T{Eigen::SparseMatrix<double>(static_cast<Eigen::Index>(boxes), static_cast<Eigen::Index>(boxes)),
                     part, opt};
  T.matrix.setFromTriplets(triplets.begin(), triplets.end());
  T.matrix.makeCompressed();
  return T;
}

/// Singular triples of the Ulam matrix; vectors hold one value per box.
inline SingularTriples ulam_svd(const TransitionMatrix& T, Eigen::Index n) {
  return singular_triples(Eigen::MatrixXd(T.matrix), n);
}

/// Coordinate text format: one JSON header line, then "col row value" lines
/// in column-major order.
inline void write_transition_matrix(const TransitionMatrix& T, const std::string& path) {
  nlohmann::json h;
  h["format"] = "cohset-transition-matrix";
  h["version"] = 1;
  h["dim"] = T.partition.dim;
  h["boxes_per_axis"] = T.partition.boxes_per_axis;
  h["lengths"] = std::vector<double>(T.partition.lengths.begin(), T.partition.lengths.begin() + T.partition.dim);
  h["samples_per_box"] = T.options.samples_per_box;
  h["t0"] = T.options.t0;
  h["t1"] = T.options.t1;
  h["h_traj"] = T.options.h_traj;
  h["seed"] = T.options.seed;
  h["layout"] = T.options.layout == SampleLayout::regular ? "regular" : "random";
  h["nonzeros"] = T.matrix.nonZeros();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << h.dump() << '\n';
  char buf[96];
  for (int c = 0; c < T.matrix.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(T.matrix, c); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %lld %.17g\n", c, static_cast<long long>(it.row()), it.value());
      out << buf;
    }
  if (!out) throw std::runtime_error("failed writing " + path);
}

inline TransitionMatrix read_transition_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  const auto h = nlohmann::json::parse(line);
  if (h.at("format") != "cohset-transition-matrix") throw std::runtime_error(path + " is not a transition matrix file");
  const int dim = h.at("dim");
  std::array<double, kMaxDim> lengths{1.0, 1.0, 1.0};
  const auto l = h.at("lengths").get<std::vector<double>>();
  for (int a = 0; a < dim; ++a) lengths[a] = l.at(a);
  BoxPartition part(dim, h.at("boxes_per_axis"), lengths);
  UlamOptions opt;
  opt.samples_per_box = h.at("samples_per_box");
  opt.t0 = h.at("t0");
  opt.t1 = h.at("t1");
  opt.h_traj = h.at("h_traj");
  opt.seed = h.at("seed");
  opt.layout = h.at("layout") == "regular" ? SampleLayout::regular : SampleLayout::random;
  std::vector<Eigen::Triplet<double>> triplets;
  long long c = 0, r = 0;
  double v = 0.0;
  while (in >> c >> r >> v) triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  const auto n = static_cast<Eigen::Index>(part.box_count());
  TransitionMatrix T{Eigen::SparseMatrix<double>(n, n), part, opt};
  T.matrix.setFromTriplets(triplets.begin(), triplets.end());
  T.matrix.makeCompressed();
  return T;
}

}  // namespace cohset
