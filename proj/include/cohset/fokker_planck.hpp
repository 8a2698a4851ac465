#pragma once

#include <cohset/errors.hpp>
#include <cohset/etd.hpp>
#include <cohset/flows.hpp>
#include <cohset/spectral.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohset {

enum class TimeScheme { rk4, etdrk4 };

/// Fokker-Planck run parameters for du/dt = (eps^2/2) Lap u - div(u b).
struct FpConfig {
  double epsilon = 0.0;
  double t0 = 0.0;
  double t1 = 1.0;
  int steps = 1;
  TimeScheme scheme = TimeScheme::etdrk4;
  int contour_points = 32;
  double contour_radius = 1.0;
  /// Project sampled velocities onto discretely divergence-free fields.
  bool solenoidal_projection = true;
  Dealias dealias = Dealias::none;

  double step() const { return (t1 - t0) / steps; }

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be >= 0");
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (!(t1 > t0)) throw std::invalid_argument("t1 must be greater than t0");
    if (contour_points < 1 || !(contour_radius > 0.0)) throw std::invalid_argument("invalid ETD contour");
  }
};

/// Velocity samples at every half step t0 + i h/2, i = 0..2*steps, on the
/// collocation grid. Shared read-only between concurrent evolutions.
class VelocitySchedule {
 public:
  VelocitySchedule(const VelocityField& flow, const FourierGrid& grid, const FpConfig& cfg) : grid_(grid) {
    cfg.validate();
    const double h = cfg.step();
    samples_.reserve(2 * static_cast<std::size_t>(cfg.steps) + 1);
    for (int i = 0; i <= 2 * cfg.steps; ++i) {
      const double t = (i == 2 * cfg.steps) ? cfg.t1 : cfg.t0 + 0.5 * h * i;
      auto b = flow.eval_grid(t, grid);
      samples_.push_back(cfg.solenoidal_projection ? project_solenoidal(b) : std::move(b));
    }
  }

  const NodalVectorField& half_step(int i) const { return samples_.at(static_cast<std::size_t>(i)); }
  const FourierGrid& grid() const { return grid_; }
  std::size_t size() const { return samples_.size(); }

 private:
  FourierGrid grid_;
  std::vector<NodalVectorField> samples_;
};

namespace detail {

inline std::vector<double> heat_diagonal(const FourierGrid& g, double epsilon) {
  std::vector<double> l(g.mode_count());
  const double d = 0.5 * epsilon * epsilon;
  for (std::size_t i = 0; i < l.size(); ++i) l[i] = -d * g.wavenumber_sq(g.mode_index(i));
  return l;
}

inline SpectralField advection_term(const SpectralField& u, const NodalVectorField& b, Dealias dealias) {
  auto a = advection_skew(u, b, dealias);
  a *= -1.0;
  return a;
}

inline void require_finite(const SpectralField& u, int step) {
  for (const auto& c : u.coeffs)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw NumericalError("non-finite Fokker-Planck state at step " + std::to_string(step));
}

}  // namespace detail

/// Full right-hand side (eps^2/2) Lap u - div(u b(t)) with b sampled on
/// u's collocation grid.
inline SpectralField fp_rhs(const SpectralField& u, double t, double epsilon, const VelocityField& flow,
                            bool solenoidal_projection = true) {
  auto b = flow.eval_grid(t, u.grid);
  if (solenoidal_projection) b = project_solenoidal(b);
  auto out = laplacian_apply(u);
  out *= 0.5 * epsilon * epsilon;
  out += detail::advection_term(u, b, Dealias::none);
  return out;
}

/// Propagate u0 from cfg.t0 to cfg.t1 using precomputed velocities.
inline SpectralField evolve(const SpectralField& u0, const FpConfig& cfg, const VelocitySchedule& schedule,
                            const EtdCoefficients* etd = nullptr) {
  cfg.validate();
  if (!(schedule.grid() == u0.grid)) throw std::invalid_argument("velocity schedule grid differs from the field's");
  if (schedule.size() != 2 * static_cast<std::size_t>(cfg.steps) + 1)
    throw std::invalid_argument("velocity schedule does not match the step count");

  const auto& g = u0.grid;
  const double h = cfg.step();
  const auto l = detail::heat_diagonal(g, cfg.epsilon);
  const std::size_t n = l.size();
  auto nonlinear = [&](const SpectralField& u, int half) {
    return detail::advection_term(u, schedule.half_step(half), cfg.dealias);
  };

  SpectralField u = u0;
  if (cfg.scheme == TimeScheme::etdrk4) {
    EtdCoefficients local;
    if (etd == nullptr) {
      local = etd_coefficients(l, h, cfg.contour_points, cfg.contour_radius);
      etd = &local;
    }
    if (etd->e.size() != n) throw std::invalid_argument("ETD coefficients do not match the grid");
    for (int s = 0; s < cfg.steps; ++s) {
      const auto nu = nonlinear(u, 2 * s);
      auto a = SpectralField::zeros(g);
      for (std::size_t i = 0; i < n; ++i) a.coeffs[i] = etd->e_half[i] * u.coeffs[i] + etd->q[i] * nu.coeffs[i];
      const auto na = nonlinear(a, 2 * s + 1);
      auto b = SpectralField::zeros(g);
      for (std::size_t i = 0; i < n; ++i) b.coeffs[i] = etd->e_half[i] * u.coeffs[i] + etd->q[i] * na.coeffs[i];
      const auto nb = nonlinear(b, 2 * s + 1);
      auto c = SpectralField::zeros(g);
      for (std::size_t i = 0; i < n; ++i)
        c.coeffs[i] = etd->e_half[i] * a.coeffs[i] + etd->q[i] * (2.0 * nb.coeffs[i] - nu.coeffs[i]);
      const auto nc = nonlinear(c, 2 * s + 2);
      for (std::size_t i = 0; i < n; ++i)
        u.coeffs[i] = etd->e[i] * u.coeffs[i] + etd->f1[i] * nu.coeffs[i] +
                      2.0 * etd->f2[i] * (na.coeffs[i] + nb.coeffs[i]) + etd->f3[i] * nc.coeffs[i];
      detail::require_finite(u, s);
    }
    return u;
  }

  auto rhs = [&](const SpectralField& v, int half) {
    auto r = nonlinear(v, half);
    for (std::size_t i = 0; i < n; ++i) r.coeffs[i] += l[i] * v.coeffs[i];
    return r;
  };
  auto axpy = [&](const SpectralField& x, double a, const SpectralField& y) {
    SpectralField r = x;
    for (std::size_t i = 0; i < n; ++i) r.coeffs[i] += a * y.coeffs[i];
    return r;
  };
  for (int s = 0; s < cfg.steps; ++s) {
    const auto k1 = rhs(u, 2 * s);
    const auto k2 = rhs(axpy(u, 0.5 * h, k1), 2 * s + 1);
    const auto k3 = rhs(axpy(u, 0.5 * h, k2), 2 * s + 1);
    const auto k4 = rhs(axpy(u, h, k3), 2 * s + 2);
    for (std::size_t i = 0; i < n; ++i)
      u.coeffs[i] += h / 6.0 * (k1.coeffs[i] + 2.0 * k2.coeffs[i] + 2.0 * k3.coeffs[i] + k4.coeffs[i]);
    detail::require_finite(u, s);
  }
  return u;
}

inline SpectralField evolve(const SpectralField& u0, const FpConfig& cfg, const VelocityField& flow) {
  const VelocitySchedule schedule(flow, u0.grid, cfg);
  return evolve(u0, cfg, schedule);
}

}  // namespace cohset
