#pragma once

#include <cohset/fft.hpp>
#include <cohset/grid.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohset {

/// Coefficients of a trigonometric polynomial in V_N, basis e^{i<kappa(k),x>}
/// with unit amplitude. Storage is centered (index j <-> k = j - (N-1)/2),
/// axis-0 fastest, N^d entries.
struct SpectralField {
  FourierGrid grid;
  std::vector<Complex> coeffs;

  static SpectralField zeros(const FourierGrid& g) { return {g, std::vector<Complex>(g.mode_count())}; }

  /// Single basis function phi_k.
  static SpectralField basis(const FourierGrid& g, const MultiIndex& k) {
    auto f = zeros(g);
    f.coeffs[g.mode_flat(k)] = 1.0;
    return f;
  }

  Complex& operator[](const MultiIndex& k) { return coeffs[grid.mode_flat(k)]; }
  const Complex& operator[](const MultiIndex& k) const { return coeffs[grid.mode_flat(k)]; }

  SpectralField& operator+=(const SpectralField& o) {
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= o.coeffs[i];
    return *this;
  }
  SpectralField& operator*=(Complex s) {
    for (auto& c : coeffs) c *= s;
    return *this;
  }
};

/// Real values at the equispaced nodes of `grid` (grid.points per axis).
struct RealField {
  FourierGrid grid;
  std::vector<double> values;

  static RealField zeros(const FourierGrid& g) { return {g, std::vector<double>(g.node_count())}; }

  template <class F>
  static RealField sample(const FourierGrid& g, F&& fn) {
    auto r = zeros(g);
    for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] = fn(g.node_point(i));
    return r;
  }

  double integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return grid.quad_weight() * s;
  }
};

/// Velocity (or any vector) field sampled at the nodes of `grid`.
struct NodalVectorField {
  FourierGrid grid;
  std::array<std::vector<double>, kMaxDim> components;

  static NodalVectorField zeros(const FourierGrid& g) {
    NodalVectorField v{g, {}};
    for (int a = 0; a < g.dim; ++a) v.components[a].assign(g.node_count(), 0.0);
    return v;
  }
};

namespace detail {

inline std::size_t fft_index(const FourierGrid& g, int points, const MultiIndex& k) {
  std::size_t flat = 0;
  for (int a = g.dim - 1; a >= 0; --a) {
    const int j = k[a] < 0 ? k[a] + points : k[a];
    flat = flat * points + static_cast<std::size_t>(j);
  }
  return flat;
}

inline std::size_t cube(int points, int dim) {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(points);
  return n;
}

/// Zero-pad coefficients into an FFT-ordered buffer of points^d entries.
inline std::vector<Complex> scatter(const FourierGrid& g, std::span<const Complex> coeffs, int points) {
  std::vector<Complex> buf(cube(points, g.dim));
  for (std::size_t i = 0; i < coeffs.size(); ++i) buf[fft_index(g, points, g.mode_index(i))] = coeffs[i];
  return buf;
}

/// Keep the N^d lowest modes of an FFT-ordered buffer, scaled by `scale`.
inline void gather(const FourierGrid& g, std::span<const Complex> buf, int points, double scale,
                   std::span<Complex> coeffs) {
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] = scale * buf[fft_index(g, points, g.mode_index(i))];
}

inline void require_same_modes(const SpectralField& a, const SpectralField& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("spectral fields live on different grids");
}

}  // namespace detail

/// Nodal (complex) values of u at points^d equispaced nodes.
inline std::vector<Complex> to_nodal(const SpectralField& u, int points) {
  if (points < u.grid.modes)
    throw std::invalid_argument("target points (" + std::to_string(points) + ") must be >= modes (" +
                                std::to_string(u.grid.modes) + ")");
  auto buf = detail::scatter(u.grid, u.coeffs, points);
  fft_inplace(buf, u.grid.dim, points, +1);
  return buf;
}

/// Truncated trigonometric-interpolant coefficients of nodal data on `g`'s
/// collocation grid (g.points per axis).
inline SpectralField from_nodal(const FourierGrid& g, std::vector<Complex> nodal) {
  if (nodal.size() != g.node_count()) throw std::invalid_argument("nodal data does not match grid shape");
  fft_inplace(nodal, g.dim, g.points, -1);
  auto out = SpectralField::zeros(g);
  detail::gather(g, nodal, g.points, 1.0 / static_cast<double>(g.node_count()), out.coeffs);
  return out;
}

inline SpectralField forward(const RealField& f) {
  std::vector<Complex> buf(f.values.begin(), f.values.end());
  return from_nodal(f.grid, std::move(buf));
}

/// Evaluate u at target_points^d nodes (zero padding, no smoothing).
/// The imaginary part is dropped; callers that need it use to_nodal.
inline RealField inverse(const SpectralField& u, int target_points) {
  auto nodal = to_nodal(u, target_points);
  RealField r{u.grid.with_points(target_points), std::vector<double>(nodal.size())};
  for (std::size_t i = 0; i < nodal.size(); ++i) r.values[i] = nodal[i].real();
  return r;
}

inline RealField inverse(const SpectralField& u) { return inverse(u, u.grid.points); }

/// Point evaluation of the trigonometric polynomial (direct summation).
inline Complex evaluate(const SpectralField& u, const Point& x) {
  const auto& g = u.grid;
  Complex s = 0.0;
  for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
    const auto k = g.mode_index(i);
    double phase = 0.0;
    for (int a = 0; a < g.dim; ++a) phase += g.wavenumber(a, k[a]) * x[a];
    s += u.coeffs[i] * Complex(std::cos(phase), std::sin(phase));
  }
  return s;
}

inline SpectralField laplacian_apply(const SpectralField& u) {
  SpectralField out = u;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] *= -u.grid.wavenumber_sq(u.grid.mode_index(i));
  return out;
}

/// d/dx_axis as multiplication by i kappa_axis.
inline SpectralField derivative_apply(const SpectralField& u, int axis) {
  SpectralField out = u;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i)
    out.coeffs[i] *= Complex(0.0, u.grid.wavenumber(axis, u.grid.mode_index(i)[axis]));
  return out;
}

inline std::vector<SpectralField> gradient_apply(const SpectralField& u) {
  std::vector<SpectralField> g;
  g.reserve(u.grid.dim);
  for (int a = 0; a < u.grid.dim; ++a) g.push_back(derivative_apply(u, a));
  return g;
}

inline SpectralField divergence_apply(std::span<const SpectralField> v) {
  if (v.empty()) throw std::invalid_argument("divergence of an empty vector field");
  const auto& g = v.front().grid;
  if (v.size() != static_cast<std::size_t>(g.dim)) throw std::invalid_argument("vector field has wrong arity");
  auto out = SpectralField::zeros(g);
  for (int a = 0; a < g.dim; ++a) {
    detail::require_same_modes(v[a], v.front());
    out += derivative_apply(v[a], a);
  }
  return out;
}

/// L2(X) norm of a field in V_N: sqrt(m(X) sum |c_k|^2).
inline double l2_norm(const SpectralField& u) {
  double s = 0.0;
  for (const auto& c : u.coeffs) s += std::norm(c);
  return std::sqrt(u.grid.volume() * s);
}

/// Largest deviation from coeffs(-k) = conj(coeffs(k)).
inline double conjugate_asymmetry(const SpectralField& u) {
  double worst = 0.0;
  for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
    auto k = u.grid.mode_index(i);
    for (int a = 0; a < u.grid.dim; ++a) k[a] = -k[a];
    worst = std::max(worst, std::abs(u.coeffs[u.grid.mode_flat(k)] - std::conj(u.coeffs[i])));
  }
  return worst;
}

enum class Dealias { none, two_thirds };

/// Skew-symmetric advection: the V_N projection of
///   1/2 div(b u) + 1/2 b . grad u,
/// with both products formed pointwise at the collocation nodes of u.grid.
/// On real coefficient space the induced map is skew-adjoint.
inline SpectralField advection_skew(const SpectralField& u, const NodalVectorField& b,
                                    Dealias dealias = Dealias::none) {
  const auto& g = u.grid;
  if (b.grid.dim != g.dim || b.grid.points != g.points)
    throw std::invalid_argument("velocity nodes do not match the collocation grid");
  const std::size_t nodes = g.node_count();
  for (int a = 0; a < g.dim; ++a)
    if (b.components[a].size() != nodes) throw std::invalid_argument("velocity component has wrong size");

  const auto u_nodal = to_nodal(u, g.points);
  auto out = SpectralField::zeros(g);
  std::vector<Complex> transport(nodes, 0.0);  // sum_a b_a d_a u

  for (int a = 0; a < g.dim; ++a) {
    const auto& ba = b.components[a];
    std::vector<Complex> flux(nodes);
    for (std::size_t j = 0; j < nodes; ++j) flux[j] = ba[j] * u_nodal[j];
    auto flux_hat = from_nodal(g, std::move(flux));
    out += derivative_apply(flux_hat, a);

    const auto du = to_nodal(derivative_apply(u, a), g.points);
    for (std::size_t j = 0; j < nodes; ++j) transport[j] += ba[j] * du[j];
  }
  out += from_nodal(g, std::move(transport));
  out *= 0.5;

  if (dealias == Dealias::two_thirds) {
    const int cut = g.half_modes() * 2 / 3;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
      const auto k = g.mode_index(i);
      for (int a = 0; a < g.dim; ++a)
        if (std::abs(k[a]) > cut) out.coeffs[i] = 0.0;
    }
  }
  return out;
}

/// Remove the discretely compressible part of a nodal velocity field: the
/// returned field has identically zero spectral divergence on the nodes.
/// Sampling a divergence-free but non-band-limited flow aliases a small
/// compressible component into the low modes; it would otherwise break
/// exact mass conservation of the discrete operator.
inline NodalVectorField project_solenoidal(const NodalVectorField& b) {
  const auto& g = b.grid;
  const int M = g.points;
  const std::size_t nodes = g.node_count();
  std::array<std::vector<Complex>, kMaxDim> hat;
  for (int a = 0; a < g.dim; ++a) {
    hat[a].assign(b.components[a].begin(), b.components[a].end());
    fft_inplace(hat[a], g.dim, M, -1);
  }
  for (std::size_t flat = 0; flat < nodes; ++flat) {
    std::size_t rest = flat;
    std::array<double, kMaxDim> kappa{};
    bool nyquist = false;
    for (int a = 0; a < g.dim; ++a) {
      int j = static_cast<int>(rest % M);
      rest /= M;
      if (M % 2 == 0 && j == M / 2) nyquist = true;
      const int k = j <= M / 2 ? j : j - M;
      kappa[a] = g.wavenumber(a, k);
    }
    double k2 = 0.0;
    Complex dot = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      k2 += kappa[a] * kappa[a];
      dot += kappa[a] * hat[a][flat];
    }
    if (k2 == 0.0) continue;
    if (nyquist) {
      // The Nyquist derivative is not representable symmetrically; drop it.
      for (int a = 0; a < g.dim; ++a) hat[a][flat] = 0.0;
      continue;
    }
    for (int a = 0; a < g.dim; ++a) hat[a][flat] -= kappa[a] * dot / k2;
  }
  NodalVectorField out{g, {}};
  const double scale = 1.0 / static_cast<double>(nodes);
  for (int a = 0; a < g.dim; ++a) {
    fft_inplace(hat[a], g.dim, M, +1);
    out.components[a].resize(nodes);
    for (std::size_t j = 0; j < nodes; ++j) out.components[a][j] = scale * hat[a][j].real();
  }
  return out;
}

/// Max nodal magnitude of the spectral divergence of a nodal vector field,
/// using every resolvable mode of the node grid.
inline double spectral_divergence_max(const NodalVectorField& b) {
  const auto& g = b.grid;
  const int M = g.points;
  const int n = (M % 2 == 1) ? M : M - 1;
  const auto full = g.with_modes(n);
  auto div = SpectralField::zeros(full);
  for (int a = 0; a < g.dim; ++a) {
    auto c = from_nodal(full, std::vector<Complex>(b.components[a].begin(), b.components[a].end()));
    div += derivative_apply(c, a);
  }
  const auto nodal = to_nodal(div, M);
  double worst = 0.0;
  for (const auto& v : nodal) worst = std::max(worst, std::abs(v));
  return worst;
}

}  // namespace cohset
