#pragma once

#include <cohset/errors.hpp>
#include <cohset/flows.hpp>
#include <cohset/parallel.hpp>
#include <cohset/transfer.hpp>
#include <cohset/ulam.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohset {

/// How a node grid's cells sit around the nodes.
enum class CellAnchor {
  centered,      // cell [x_j - h/2, x_j + h/2): collocation plot grids
  lower_corner,  // cell [x_j, x_j + h): Ulam boxes
};

using Mask = std::vector<std::uint8_t>;

struct CoherentPair {
  FourierGrid grid;  // plot grid the masks live on
  CellAnchor anchor = CellAnchor::centered;
  Mask a0;
  Mask a1;
  double theta = 0.0;
  double rho = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> kappa;
  std::optional<double> kappa_stderr;

  double cell_volume() const { return grid.quad_weight(); }
  double volume_a0() const { return count(a0) * cell_volume(); }
  double volume_a1() const { return count(a1) * cell_volume(); }

  static std::size_t count(const Mask& m) { return static_cast<std::size_t>(std::count(m.begin(), m.end(), 1)); }
};

inline Mask complement(const Mask& m) {
  Mask c(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) c[i] = m[i] ? 0 : 1;
  return c;
}

namespace detail {

inline void require_proper(const Mask& m, const char* name) {
  const auto n = CoherentPair::count(m);
  if (n == 0) throw DegenerateError(std::string(name) + " is empty");
  if (n == m.size()) throw DegenerateError(std::string(name) + " is the whole domain");
}

}  // namespace detail

/// A0 = {v2 > theta}, A1 = {u2 > 0}, both on the fields' common grid.
inline CoherentPair threshold_pair(const RealField& v2, const RealField& u2, double theta) {
  if (!(v2.grid.points == u2.grid.points && v2.grid.same_geometry(u2.grid)))
    throw std::invalid_argument("v2 and u2 must share one plot grid");
  CoherentPair p;
  p.grid = v2.grid;
  p.theta = theta;
  p.a0.resize(v2.values.size());
  p.a1.resize(u2.values.size());
  for (std::size_t i = 0; i < v2.values.size(); ++i) p.a0[i] = v2.values[i] > theta ? 1 : 0;
  for (std::size_t i = 0; i < u2.values.size(); ++i) p.a1[i] = u2.values[i] > 0.0 ? 1 : 0;
  detail::require_proper(p.a0, "A0");
  detail::require_proper(p.a1, "A1");
  return p;
}

/// A linear map on nodal function values of a plot grid.
using NodalOperator = std::function<std::vector<double>(const std::vector<double>&)>;

/// The Fokker-Planck transfer matrix acting on functions sampled on a plot
/// grid: project onto V_N by the plot grid's quadrature, apply, and evaluate
/// the image trigonometrically on the plot grid. Holds a reference to P.
inline NodalOperator nodal_operator(const TransferMatrix& P, const FourierGrid& plot) {
  if (!plot.same_geometry(P.grid)) throw std::invalid_argument("plot grid geometry differs from the matrix grid");
  const auto plot_n = plot.with_modes(P.grid.modes);
  return [&P, plot_n, basis = RealBasis(P.grid)](const std::vector<double>& f) {
    std::vector<Complex> nodal(f.begin(), f.end());
    auto c = from_nodal(plot_n, std::move(nodal));
    c.grid = P.grid;
    const Eigen::VectorXd y = P.matrix * basis.analyze(c);
    const auto image = left_vector_to_field(P.grid, y, plot_n.points);
    return image.values;
  };
}

/// Ulam matrix acting on one value per box (plot grid = box grid). Holds a
/// reference to T.
inline NodalOperator nodal_operator(const TransitionMatrix& T) {
  return [&T](const std::vector<double>& f) {
    const Eigen::Map<const Eigen::VectorXd> x(f.data(), static_cast<Eigen::Index>(f.size()));
    const Eigen::VectorXd y = T.matrix * x;
    return std::vector<double>(y.data(), y.data() + y.size());
  };
}

/// rho = <P 1_A0, 1_A1>/m(A0) + <P 1_A0c, 1_A1c>/m(A0c), inner products by
/// the plot grid's uniform quadrature (the cell volume cancels).
inline double coherence_ratio(const NodalOperator& op, const CoherentPair& pair) {
  const std::size_t n = pair.a0.size();
  if (pair.a1.size() != n || n != pair.grid.node_count()) throw std::invalid_argument("mask sizes do not match");
  const auto n0 = CoherentPair::count(pair.a0);
  if (n0 == 0 || n0 == n) throw DegenerateError("A0 or its complement has zero volume");

  auto term = [&](const Mask& src, const Mask& dst, std::size_t src_count) {
    std::vector<double> ind(src.begin(), src.end());
    const auto img = op(ind);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (dst[i]) s += img[i];
    return s / static_cast<double>(src_count);
  };
  return term(pair.a0, pair.a1, n0) + term(complement(pair.a0), complement(pair.a1), n - n0);
}

inline double coherence_ratio(const TransferMatrix& P, const CoherentPair& pair) {
  return coherence_ratio(nodal_operator(P, pair.grid), pair);
}

/// `count` quantiles of the field values at levels (i + 1/2)/count.
inline std::vector<double> quantile_thresholds(const RealField& v, int count = 64) {
  std::vector<double> sorted = v.values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> q(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>((i + 0.5) / count * static_cast<double>(sorted.size()));
    q[static_cast<std::size_t>(i)] = sorted[std::min(idx, sorted.size() - 1)];
  }
  return q;
}

/// Best threshold pair by coherence ratio; ties go to the theta nearest 0.
inline CoherentPair line_search_threshold(const RealField& v2, const RealField& u2, const NodalOperator& op,
                                          const std::vector<double>& thetas) {
  std::optional<CoherentPair> best;
  for (double theta : thetas) {
    CoherentPair p;
    try {
      p = threshold_pair(v2, u2, theta);
    } catch (const DegenerateError&) {
      continue;
    }
    p.rho = coherence_ratio(op, p);
    if (!best || p.rho > best->rho || (p.rho == best->rho && std::abs(theta) < std::abs(best->theta)))
      best = std::move(p);
  }
  if (!best) throw DegenerateError("every candidate threshold gives a degenerate pair");
  return *best;
}

inline CoherentPair line_search_threshold(const RealField& v2, const RealField& u2, const NodalOperator& op) {
  return line_search_threshold(v2, u2, op, quantile_thresholds(v2));
}

struct SdeRun {
  std::size_t particles = 100000;
  double dt = 0.05;
  std::uint64_t seed = 0;
  std::size_t batch = 4096;
};

struct SdeEstimate {
  double kappa = 0.0;
  double std_error = 0.0;
  std::size_t hits = 0;
  std::size_t particles = 0;
};

/// Euler-Maruyama for dx = b dt + eps dB: x <- x + b(t,x) dt + eps sqrt(dt) xi,
/// with ceil((t1-t0)/dt) equal steps and periodic wrapping.
template <class Rng>
void euler_maruyama(const VelocityField& flow, double epsilon, std::vector<Point>& pts, double t0, double t1,
                    double dt, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("SDE step must be positive");
  const int steps = std::max(1, static_cast<int>(std::ceil((t1 - t0) / dt - 1e-9)));
  const double h = (t1 - t0) / steps;
  const double noise = epsilon * std::sqrt(h);
  const int d = flow.dim();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Velocity> v(pts.size());
  for (int s = 0; s < steps; ++s) {
    flow.eval_points(t0 + s * h, pts, v);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (int a = 0; a < d; ++a) pts[i][a] = flow.wrap(a, pts[i][a] + v[i][a] * h + noise * normal(rng));
  }
}

namespace detail {

inline std::size_t cell_of(const FourierGrid& g, CellAnchor anchor, const Point& x) {
  std::size_t flat = 0;
  for (int a = g.dim - 1; a >= 0; --a) {
    const double u = g.wrap(a, x[a]) / g.spacing(a);
    long j = anchor == CellAnchor::centered ? std::lround(u) : static_cast<long>(std::floor(u));
    j %= g.points;
    if (j < 0) j += g.points;
    flat = flat * g.points + static_cast<std::size_t>(j);
  }
  return flat;
}

inline std::mt19937_64 batch_rng(std::uint64_t seed, std::size_t batch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(batch), static_cast<std::uint32_t>(batch >> 32), 0x5de5u};
  return std::mt19937_64(seq);
}

}  // namespace detail

/// Monte-Carlo estimate of the fraction of SDE trajectories started
/// uniformly in A0 at t0 that lie in A1 at t1. Batches use independent
/// streams derived from the seed and are merged in batch order.
inline SdeEstimate sde_kappa(const VelocityField& flow, double epsilon, const CoherentPair& pair, const SdeRun& run,
                             double t0, double t1, unsigned threads = 0) {
  const auto& g = pair.grid;
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < pair.a0.size(); ++i)
    if (pair.a0[i]) cells.push_back(i);
  if (cells.empty()) throw DegenerateError("A0 is empty");
  if (run.particles == 0 || run.batch == 0) throw std::invalid_argument("need particles and a positive batch size");
  if (flow.dim() != g.dim) throw std::invalid_argument("flow and mask dimensions differ");

  const std::size_t batches = (run.particles + run.batch - 1) / run.batch;
  std::vector<std::size_t> hits(batches, 0);
  parallel_for(batches, threads, [&](std::size_t b) {
    auto rng = detail::batch_rng(run.seed, b);
    const std::size_t n = std::min(run.batch, run.particles - b * run.batch);
    std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Point> pts(n);
    for (auto& p : pts) {
      const auto node = g.node_point(cells[pick(rng)]);
      p = {0.0, 0.0, 0.0};
      for (int a = 0; a < g.dim; ++a) {
        const double off = pair.anchor == CellAnchor::centered ? unit(rng) - 0.5 : unit(rng);
        p[a] = g.wrap(a, node[a] + off * g.spacing(a));
      }
    }
    euler_maruyama(flow, epsilon, pts, t0, t1, run.dt, rng);
    std::size_t h = 0;
    for (const auto& p : pts)
      if (pair.a1[detail::cell_of(g, pair.anchor, p)]) ++h;
    hits[b] = h;
  });
  SdeEstimate est;
  est.particles = run.particles;
  for (auto h : hits) est.hits += h;
  est.kappa = static_cast<double>(est.hits) / static_cast<double>(est.particles);
  est.std_error = std::sqrt(est.kappa * (1.0 - est.kappa) / static_cast<double>(est.particles));
  return est;
}

/// k-means over per-node feature vectors (one feature per field): k-means++
/// seeding, Lloyd iterations, best of `restarts` by within-cluster sum of
/// squares. Labels are renumbered in order of first appearance.
inline std::vector<int> kmeans_partition(const std::vector<RealField>& fields, int k, std::uint64_t seed,
                                         int restarts = 10, int max_iter = 300) {
  if (fields.empty()) throw std::invalid_argument("k-means needs at least one field");
  if (k < 2) throw std::invalid_argument("k-means needs k >= 2");
  const std::size_t n = fields.front().values.size();
  for (const auto& f : fields)
    if (f.values.size() != n) throw std::invalid_argument("all fields must share one grid");
  if (static_cast<std::size_t>(k) > n) throw std::invalid_argument("k exceeds the number of nodes");
  const std::size_t dim = fields.size();
  auto feature = [&](std::size_t i, std::size_t c) { return fields[c].values[i]; };
  auto dist2 = [&](std::size_t i, const std::vector<double>& centre) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = feature(i, c) - centre[c];
      s += d * d;
    }
    return s;
  };

  std::mt19937_64 rng(seed);
  std::vector<int> best_labels;
  double best_wcss = std::numeric_limits<double>::infinity();

  for (int r = 0; r < std::max(1, restarts); ++r) {
    std::vector<std::vector<double>> centres;
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    const std::size_t i0 = first(rng);
    centres.emplace_back(dim);
    for (std::size_t c = 0; c < dim; ++c) centres.back()[c] = feature(i0, c);
    std::vector<double> d2(n);
    while (centres.size() < static_cast<std::size_t>(k)) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& ce : centres) m = std::min(m, dist2(i, ce));
        d2[i] = m;
        total += m;
      }
      std::size_t pick = 0;
      if (total > 0.0) {
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        for (pick = 0; pick + 1 < n; ++pick) {
          target -= d2[pick];
          if (target < 0.0) break;
        }
      } else {
        pick = first(rng);
      }
      centres.emplace_back(dim);
      for (std::size_t c = 0; c < dim; ++c) centres.back()[c] = feature(pick, c);
    }

    std::vector<int> labels(n, -1);
    for (int it = 0; it < max_iter; ++it) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        int arg = 0;
        double m = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          const double d = dist2(i, centres[static_cast<std::size_t>(c)]);
          if (d < m) {
            m = d;
            arg = c;
          }
        }
        if (labels[i] != arg) {
          labels[i] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      std::vector<std::vector<double>> sum(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
      std::vector<std::size_t> cnt(static_cast<std::size_t>(k), 0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto l = static_cast<std::size_t>(labels[i]);
        ++cnt[l];
        for (std::size_t c = 0; c < dim; ++c) sum[l][c] += feature(i, c);
      }
      for (std::size_t l = 0; l < static_cast<std::size_t>(k); ++l)
        if (cnt[l] > 0)
          for (std::size_t c = 0; c < dim; ++c) centres[l][c] = sum[l][c] / static_cast<double>(cnt[l]);
    }
    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) wcss += dist2(i, centres[static_cast<std::size_t>(labels[i])]);
    if (wcss < best_wcss) {
      best_wcss = wcss;
      best_labels = labels;
    }
  }

  std::vector<int> remap(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (auto& l : best_labels) {
    auto& m = remap[static_cast<std::size_t>(l)];
    if (m < 0) m = next++;
    l = m;
  }
  return best_labels;
}

}  // namespace cohset
