#pragma once

#include <cohset/errors.hpp>
#include <cohset/etd.hpp>
#include <cohset/flows.hpp>
#include <cohset/spectral.hpp>

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohset {

/// 2D incompressible Navier-Stokes in vorticity form on [0,2pi]^2,
///   w_t + v . grad w = nu Lap w,  Lap psi = -w,  v = (psi_y, -psi_x).
struct NsConfig {
  double nu = 1e-3;
  double t_start = 0.0;
  double t_end = 20.0;
  int steps = 400;
  /// Emit a velocity snapshot every this many steps (and at t_end).
  int snapshot_every = 1;
  /// Products are formed on this many nodes per axis; 0 picks the 3/2 rule.
  int work_points = 0;

  double step() const { return (t_end - t_start) / steps; }

  void validate() const {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("viscosity must be positive");
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (snapshot_every < 1) throw std::invalid_argument("snapshot_every must be >= 1");
    if (!(t_end > t_start)) throw std::invalid_argument("t_end must be greater than t_start");
    if (work_points < 0) throw std::invalid_argument("work_points must be >= 0");
  }
};

struct VorticityState {
  FourierGrid grid;  // modes: resolved wavenumbers, points: product grid
  SpectralField w_hat;
  double nu = 0.0;
};

/// Velocity nodal values at points^2 nodes of the stream function
/// psi_hat = w_hat / |kappa|^2 (psi_hat(0) = 0).
inline NodalVectorField velocity_from_vorticity(const SpectralField& w_hat, int points) {
  const auto& g = w_hat.grid;
  if (g.dim != 2) throw std::invalid_argument("vorticity fields are two-dimensional");
  auto v1 = SpectralField::zeros(g);
  auto v2 = SpectralField::zeros(g);
  for (std::size_t i = 0; i < w_hat.coeffs.size(); ++i) {
    const auto k = g.mode_index(i);
    const double k2 = g.wavenumber_sq(k);
    if (k2 == 0.0) continue;
    const Complex psi = w_hat.coeffs[i] / k2;
    v1.coeffs[i] = Complex(0.0, g.wavenumber(1, k[1])) * psi;
    v2.coeffs[i] = -Complex(0.0, g.wavenumber(0, k[0])) * psi;
  }
  NodalVectorField out{g.with_points(points), {}};
  const auto n1 = to_nodal(v1, points);
  const auto n2 = to_nodal(v2, points);
  out.components[0].resize(n1.size());
  out.components[1].resize(n2.size());
  for (std::size_t j = 0; j < n1.size(); ++j) {
    out.components[0][j] = n1[j].real();
    out.components[1][j] = n2[j].real();
  }
  return out;
}

/// Two positive vortices at (pi, +-pi/4) and a weaker negative one at
/// (pi/4, pi/4). Displacements use the nearest periodic image; the Gaussians
/// are below 1e-20 at half the domain so no image sum is taken.
inline RealField three_vortex_ic(const FourierGrid& g) {
  constexpr double pi = std::numbers::pi;
  auto d2 = [&](const Point& p, double cx, double cy) {
    double dx = p[0] - cx, dy = p[1] - cy;
    dx -= g.lengths[0] * std::round(dx / g.lengths[0]);
    dy -= g.lengths[1] * std::round(dy / g.lengths[1]);
    return dx * dx + dy * dy;
  };
  return RealField::sample(g, [&](const Point& p) {
    return std::exp(-5.0 * d2(p, pi, pi / 4)) + std::exp(-5.0 * d2(p, pi, -pi / 4)) -
           0.5 * std::exp(-2.5 * d2(p, pi / 4, pi / 4));
  });
}

/// Independent uniform values in [-1, 1] at each node (axis-0 fastest order).
inline RealField random_ic(const FourierGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto f = RealField::zeros(g);
  for (auto& v : f.values) v = dist(rng);
  return f;
}

/// Vorticity state from nodal values: keeps every mode the node grid
/// resolves symmetrically (points or points-1 modes per axis).
inline VorticityState make_vorticity_state(const RealField& w0, double nu, int work_points = 0) {
  const auto& g0 = w0.grid;
  if (g0.dim != 2) throw std::invalid_argument("vorticity fields are two-dimensional");
  const int modes = g0.points % 2 == 1 ? g0.points : g0.points - 1;
  const auto nodal_grid = g0.with_modes(modes);
  if (work_points == 0) work_points = (3 * g0.points + 1) / 2;
  if (work_points < modes) throw std::invalid_argument("work grid is coarser than the resolved modes");
  auto w = forward(RealField{nodal_grid, w0.values});
  VorticityState s{nodal_grid.with_points(work_points), std::move(w), nu};
  s.w_hat.grid = s.grid;
  return s;
}

/// -(v . grad w) in skew form with v recomputed from w on the work grid.
inline SpectralField ns_nonlinear(const SpectralField& w) {
  auto n = advection_skew(w, velocity_from_vorticity(w, w.grid.points));
  n *= -1.0;
  return n;
}

struct NsResult {
  std::shared_ptr<GriddedFlow> flow;
  std::vector<double> times;
  std::vector<double> enstrophy;       // ||w||_2 at each snapshot
  std::vector<double> mean_vorticity;  // k = 0 coefficient at each snapshot
};

/// ETDRK4 integration; velocity snapshots on w0's node grid.
inline NsResult ns_evolve(const RealField& w0, const NsConfig& cfg) {
  cfg.validate();
  auto state = make_vorticity_state(w0, cfg.nu, cfg.work_points);
  const auto& g = state.grid;
  const int out_points = w0.grid.points;
  const double h = cfg.step();

  std::vector<double> l(g.mode_count());
  for (std::size_t i = 0; i < l.size(); ++i) l[i] = -cfg.nu * g.wavenumber_sq(g.mode_index(i));
  const auto etd = etd_coefficients(l, h);
  const std::size_t n = l.size();
  const std::size_t zero = g.mode_flat({0, 0, 0});

  NsResult res;
  std::vector<NodalVectorField> snaps;
  auto record = [&](double t, const SpectralField& w) {
    res.times.push_back(t);
    res.enstrophy.push_back(l2_norm(w));
    res.mean_vorticity.push_back(w.coeffs[zero].real());
    snaps.push_back(velocity_from_vorticity(w, out_points));
  };

  SpectralField u = state.w_hat;
  record(cfg.t_start, u);
  for (int s = 0; s < cfg.steps; ++s) {
    const auto nu = ns_nonlinear(u);
    auto a = SpectralField::zeros(g);
    for (std::size_t i = 0; i < n; ++i) a.coeffs[i] = etd.e_half[i] * u.coeffs[i] + etd.q[i] * nu.coeffs[i];
    const auto na = ns_nonlinear(a);
    auto b = SpectralField::zeros(g);
    for (std::size_t i = 0; i < n; ++i) b.coeffs[i] = etd.e_half[i] * u.coeffs[i] + etd.q[i] * na.coeffs[i];
    const auto nb = ns_nonlinear(b);
    auto c = SpectralField::zeros(g);
    for (std::size_t i = 0; i < n; ++i)
      c.coeffs[i] = etd.e_half[i] * a.coeffs[i] + etd.q[i] * (2.0 * nb.coeffs[i] - nu.coeffs[i]);
    const auto nc = ns_nonlinear(c);
    for (std::size_t i = 0; i < n; ++i) {
      u.coeffs[i] = etd.e[i] * u.coeffs[i] + etd.f1[i] * nu.coeffs[i] +
                    2.0 * etd.f2[i] * (na.coeffs[i] + nb.coeffs[i]) + etd.f3[i] * nc.coeffs[i];
      if (!std::isfinite(u.coeffs[i].real()) || !std::isfinite(u.coeffs[i].imag()))
        throw NumericalError("vorticity blew up at step " + std::to_string(s) + " (t=" +
                             std::to_string(cfg.t_start + (s + 1) * h) + "); reduce the step or raise nu");
    }
    const bool last = s + 1 == cfg.steps;
    if ((s + 1) % cfg.snapshot_every == 0 || last) record(last ? cfg.t_end : cfg.t_start + (s + 1) * h, u);
  }
  res.flow = std::make_shared<GriddedFlow>(w0.grid, res.times, std::move(snaps));
  return res;
}

}  // namespace cohset
