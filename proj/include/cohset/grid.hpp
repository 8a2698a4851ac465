#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

namespace cohset {

inline constexpr int kMaxDim = 3;

using Point = std::array<double, kMaxDim>;
using MultiIndex = std::array<int, kMaxDim>;

/// Periodic tensor-product Fourier grid on X = [0,L_0) x ... x [0,L_{d-1}).
///
/// `modes` is the number of basis functions per axis (odd, wavenumbers
/// -(modes-1)/2 .. (modes-1)/2); `points` is the number of equispaced
/// collocation nodes per axis, x_j = j L / points. Flattened indices are
/// always axis-0 fastest.
struct FourierGrid {
  int dim = 1;
  int modes = 1;
  int points = 1;
  std::array<double, kMaxDim> lengths{1.0, 1.0, 1.0};

  static FourierGrid make(int dim, int modes, int points, std::span<const double> lengths) {
    if (dim < 1 || dim > kMaxDim)
      throw std::invalid_argument("grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
    if (modes < 1 || modes % 2 == 0)
      throw std::invalid_argument("number of modes per axis must be odd, got " + std::to_string(modes));
    if (points < modes)
      throw std::invalid_argument("collocation points (" + std::to_string(points) +
                                  ") must be >= modes (" + std::to_string(modes) + ")");
    if (lengths.size() != static_cast<std::size_t>(dim))
      throw std::invalid_argument("expected one domain length per axis");
    FourierGrid g;
    g.dim = dim;
    g.modes = modes;
    g.points = points;
    for (int i = 0; i < dim; ++i) {
      if (!(lengths[i] > 0.0) || !std::isfinite(lengths[i]))
        throw std::invalid_argument("domain lengths must be positive");
      g.lengths[i] = lengths[i];
    }
    return g;
  }

  static FourierGrid make(int dim, int modes, int points, std::initializer_list<double> lengths) {
    return make(dim, modes, points, std::span<const double>(lengths.begin(), lengths.size()));
  }

  int half_modes() const { return (modes - 1) / 2; }

  std::size_t node_count() const { return ipow(points, dim); }
  std::size_t mode_count() const { return ipow(modes, dim); }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim; ++i) v *= lengths[i];
    return v;
  }

  /// Uniform quadrature weight m(X) / points^d.
  double quad_weight() const { return volume() / static_cast<double>(node_count()); }

  double spacing(int axis) const { return lengths[axis] / points; }
  double node(int axis, int j) const { return j * spacing(axis); }

  /// Physical wavenumber 2 pi k / L_axis.
  double wavenumber(int axis, int k) const { return 2.0 * std::numbers::pi * k / lengths[axis]; }

  Point node_point(std::size_t flat) const {
    Point p{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      p[a] = node(a, static_cast<int>(flat % points));
      flat /= points;
    }
    return p;
  }

  /// Centered wavenumber multi-index of a flattened coefficient index.
  MultiIndex mode_index(std::size_t flat) const {
    MultiIndex k{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      k[a] = static_cast<int>(flat % modes) - half_modes();
      flat /= modes;
    }
    return k;
  }

  std::size_t mode_flat(const MultiIndex& k) const {
    std::size_t flat = 0;
    for (int a = dim - 1; a >= 0; --a) flat = flat * modes + static_cast<std::size_t>(k[a] + half_modes());
    return flat;
  }

  double wavenumber_sq(const MultiIndex& k) const {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double w = wavenumber(a, k[a]);
      s += w * w;
    }
    return s;
  }

  FourierGrid with_points(int m) const {
    if (m < modes)
      throw std::invalid_argument("target points (" + std::to_string(m) + ") must be >= modes (" +
                                  std::to_string(modes) + ")");
    FourierGrid g = *this;
    g.points = m;
    return g;
  }

  FourierGrid with_modes(int n) const {
    return make(dim, n, points, std::span<const double>(lengths.data(), static_cast<std::size_t>(dim)));
  }

  /// Wrap a coordinate into [0, L_axis).
  double wrap(int axis, double x) const {
    const double L = lengths[axis];
    double r = std::fmod(x, L);
    if (r < 0.0) r += L;
    if (r >= L) r -= L;
    return r;
  }

  bool same_geometry(const FourierGrid& o) const {
    if (dim != o.dim) return false;
    for (int a = 0; a < dim; ++a)
      if (lengths[a] != o.lengths[a]) return false;
    return true;
  }

  bool operator==(const FourierGrid&) const = default;

 private:
  static std::size_t ipow(int base, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(base);
    return r;
  }
};

inline FourierGrid make_grid(int dim, int modes, int points, std::span<const double> lengths) {
  return FourierGrid::make(dim, modes, points, lengths);
}

}  // namespace cohset
