#pragma once

#include <cohset/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cohset {

using Velocity = std::array<double, kMaxDim>;

/// A time-dependent periodic vector field b(t, x).
class VelocityField {
 public:
  virtual ~VelocityField() = default;

  virtual int dim() const = 0;
  virtual std::array<double, kMaxDim> lengths() const = 0;
  virtual std::string describe() const = 0;
  virtual bool is_analytic() const { return true; }

  /// Velocity at an arbitrary point; x is wrapped periodically.
  virtual Velocity eval_point(double t, const Point& x) const = 0;

  /// Batched eval_point at one time instant.
  virtual void eval_points(double t, std::span<const Point> x, std::span<Velocity> out) const {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = eval_point(t, x[i]);
  }

  /// Velocity at every collocation node of g.
  virtual NodalVectorField eval_grid(double t, const FourierGrid& g) const {
    check_grid(g);
    auto out = NodalVectorField::zeros(g);
    for (std::size_t j = 0; j < g.node_count(); ++j) {
      const auto v = eval_point(t, g.node_point(j));
      for (int a = 0; a < g.dim; ++a) out.components[a][j] = v[a];
    }
    return out;
  }

  double wrap(int axis, double x) const {
    const double L = lengths()[axis];
    double r = std::fmod(x, L);
    if (r < 0.0) r += L;
    if (r >= L) r -= L;
    return r;
  }

 protected:
  void check_grid(const FourierGrid& g) const {
    if (g.dim != dim()) throw std::invalid_argument("grid dimension does not match the flow");
    const auto L = lengths();
    for (int a = 0; a < g.dim; ++a)
      if (std::abs(g.lengths[a] - L[a]) > 1e-12 * L[a])
        throw std::invalid_argument("grid lengths do not match the flow's periodic domain");
  }
};

/// Building block of the gyre flows,
///   g(t,x,y) = pi sin(pi f(t,x)) cos(pi f(t,y)) d/dy f(t,y),
///   f(t,x)   = delta sin(omega t) x^2 + (1 - 2 delta sin(omega t)) x.
struct GyreProfile {
  double delta = 0.25;
  double omega = 2.0 * std::numbers::pi;

  struct Terms {
    double s;   // sin(pi f)
    double c;   // cos(pi f)
    double df;  // d/dx f
  };

  Terms terms(double t, double x) const {
    const double a = delta * std::sin(omega * t);
    const double f = a * x * x + (1.0 - 2.0 * a) * x;
    return {std::sin(std::numbers::pi * f), std::cos(std::numbers::pi * f), 2.0 * a * x + 1.0 - 2.0 * a};
  }

  double g(double t, double x, double y) const {
    const auto tx = terms(t, x);
    const auto ty = terms(t, y);
    return std::numbers::pi * tx.s * ty.c * ty.df;
  }
};

/// Four gyres on the 2-torus [0,2]^2: xdot = -g(t,x,y), ydot = g(t,y,x).
class QuadrupleGyre final : public VelocityField {
 public:
  explicit QuadrupleGyre(double delta = 0.25, double omega = 2.0 * std::numbers::pi) : profile_{delta, omega} {}

  int dim() const override { return 2; }
  std::array<double, kMaxDim> lengths() const override { return {2.0, 2.0, 1.0}; }
  std::string describe() const override {
    return "quadruple_gyre(delta=" + std::to_string(profile_.delta) + ",omega=" + std::to_string(profile_.omega) + ")";
  }

  Velocity eval_point(double t, const Point& p) const override {
    const auto tx = profile_.terms(t, wrap(0, p[0]));
    const auto ty = profile_.terms(t, wrap(1, p[1]));
    constexpr double pi = std::numbers::pi;
    return {-pi * tx.s * ty.c * ty.df, pi * ty.s * tx.c * tx.df, 0.0};
  }

  void eval_points(double t, std::span<const Point> x, std::span<Velocity> out) const override {
    constexpr double pi = std::numbers::pi;
    const double a = profile_.delta * std::sin(profile_.omega * t);
    const double b = 1.0 - 2.0 * a;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double px = wrap(0, x[i][0]), py = wrap(1, x[i][1]);
      const double fx = pi * (a * px * px + b * px), fy = pi * (a * py * py + b * py);
      const double sx = std::sin(fx), cx = std::cos(fx), sy = std::sin(fy), cy = std::cos(fy);
      out[i] = {-pi * sx * cy * (2.0 * a * py + b), pi * sy * cx * (2.0 * a * px + b), 0.0};
    }
  }

  const GyreProfile& profile() const { return profile_; }

 private:
  GyreProfile profile_;
};

/// Eight gyres on the 3-torus [0,2]^3, built cyclically from the gyre
/// profile: xdot = g(x,y) - g(x,z), ydot = g(y,z) - g(y,x), zdot = g(z,x) - g(z,y).
class OctupleGyre final : public VelocityField {
 public:
  explicit OctupleGyre(double delta = 0.25, double omega = 2.0 * std::numbers::pi) : profile_{delta, omega} {}

  int dim() const override { return 3; }
  std::array<double, kMaxDim> lengths() const override { return {2.0, 2.0, 2.0}; }
  std::string describe() const override {
    return "octuple_gyre(delta=" + std::to_string(profile_.delta) + ",omega=" + std::to_string(profile_.omega) + ")";
  }

  Velocity eval_point(double t, const Point& p) const override {
    const auto x = profile_.terms(t, wrap(0, p[0]));
    const auto y = profile_.terms(t, wrap(1, p[1]));
    const auto z = profile_.terms(t, wrap(2, p[2]));
    constexpr double pi = std::numbers::pi;
    auto g = [](const GyreProfile::Terms& a, const GyreProfile::Terms& b) { return pi * a.s * b.c * b.df; };
    return {g(x, y) - g(x, z), g(y, z) - g(y, x), g(z, x) - g(z, y)};
  }

 private:
  GyreProfile profile_;
};

/// Spatially constant velocity (zero by default).
class UniformFlow final : public VelocityField {
 public:
  UniformFlow(int dim, std::array<double, kMaxDim> lengths, Velocity v = {0.0, 0.0, 0.0})
      : dim_(dim), lengths_(lengths), v_(v) {}

  int dim() const override { return dim_; }
  std::array<double, kMaxDim> lengths() const override { return lengths_; }
  std::string describe() const override { return "uniform"; }
  Velocity eval_point(double, const Point&) const override { return v_; }

 private:
  int dim_;
  std::array<double, kMaxDim> lengths_;
  Velocity v_;
};

/// Any callable (t, x) -> velocity on a periodic box.
class FunctionFlow final : public VelocityField {
 public:
  using Fn = std::function<Velocity(double, const Point&)>;
  FunctionFlow(int dim, std::array<double, kMaxDim> lengths, Fn fn, std::string name = "function")
      : dim_(dim), lengths_(lengths), fn_(std::move(fn)), name_(std::move(name)) {}

  int dim() const override { return dim_; }
  std::array<double, kMaxDim> lengths() const override { return lengths_; }
  std::string describe() const override { return name_; }
  Velocity eval_point(double t, const Point& x) const override {
    Point w = x;
    for (int a = 0; a < dim_; ++a) w[a] = wrap(a, x[a]);
    return fn_(t, w);
  }

 private:
  int dim_;
  std::array<double, kMaxDim> lengths_;
  Fn fn_;
  std::string name_;
};

/// Velocity snapshots on a fixed node grid, linear in time between
/// snapshots and trigonometrically interpolated in space.
class GriddedFlow final : public VelocityField {
 public:
  /// `grid` only supplies geometry and node count; its mode count is unused.
  GriddedFlow(FourierGrid grid, std::vector<double> times, std::vector<NodalVectorField> snapshots)
      : grid_(grid), times_(std::move(times)), snapshots_(std::move(snapshots)) {
    if (times_.empty()) throw std::invalid_argument("gridded flow needs at least one snapshot");
    if (times_.size() != snapshots_.size()) throw std::invalid_argument("snapshot count does not match times");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1])) throw std::invalid_argument("snapshot times must be strictly increasing");
    for (const auto& s : snapshots_) {
      if (s.grid.dim != grid_.dim || s.grid.points != grid_.points || !s.grid.same_geometry(grid_))
        throw std::invalid_argument("all snapshots must share one grid");
      for (int a = 0; a < grid_.dim; ++a)
        if (s.components[a].size() != grid_.node_count())
          throw std::invalid_argument("snapshot component has wrong size");
    }
  }

  int dim() const override { return grid_.dim; }
  std::array<double, kMaxDim> lengths() const override { return grid_.lengths; }
  std::string describe() const override { return "gridded(" + std::to_string(times_.size()) + " snapshots)"; }
  bool is_analytic() const override { return false; }

  const FourierGrid& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<NodalVectorField>& snapshots() const { return snapshots_; }

  /// Nodal values on the flow's own grid at time t.
  NodalVectorField eval_native(double t) const {
    const auto [i, w] = bracket(t);
    if (w == 0.0) return snapshots_[i];
    auto out = NodalVectorField::zeros(grid_);
    for (int a = 0; a < grid_.dim; ++a) {
      const auto& lo = snapshots_[i].components[a];
      const auto& hi = snapshots_[i + 1].components[a];
      auto& dst = out.components[a];
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = (1.0 - w) * lo[j] + w * hi[j];
    }
    return out;
  }

  NodalVectorField eval_grid(double t, const FourierGrid& g) const override {
    check_grid(g);
    auto native = eval_native(t);
    if (g.points == grid_.points) {
      native.grid = g;
      return native;
    }
    if (grid_.points % g.points == 0) {
      const int stride = grid_.points / g.points;
      auto out = NodalVectorField::zeros(g);
      for (std::size_t j = 0; j < g.node_count(); ++j) {
        std::size_t rest = j, src = 0, mul = 1;
        for (int a = 0; a < g.dim; ++a) {
          src += (rest % g.points) * stride * mul;
          rest /= g.points;
          mul *= grid_.points;
        }
        for (int a = 0; a < g.dim; ++a) out.components[a][j] = native.components[a][src];
      }
      return out;
    }
    return VelocityField::eval_grid(t, g);
  }

  Velocity eval_point(double t, const Point& x) const override {
    ensure_coefficients();
    const auto& coeffs_ = cache_->coeffs;
    const auto [i, w] = bracket(t);
    const int M = grid_.points;
    const int d = grid_.dim;

    // Per-axis basis values, FFT order; the even-M Nyquist term is cos.
    std::array<std::vector<Complex>, kMaxDim> e;
    for (int a = 0; a < d; ++a) {
      e[a].resize(M);
      const double xa = wrap(a, x[a]);
      for (int j = 0; j < M; ++j) {
        const int k = j <= M / 2 ? j : j - M;
        const double ph = grid_.wavenumber(a, k) * xa;
        e[a][j] = (M % 2 == 0 && j == M / 2) ? Complex(std::cos(ph), 0.0) : Complex(std::cos(ph), std::sin(ph));
      }
    }
    Velocity v{0.0, 0.0, 0.0};
    const std::size_t nodes = grid_.node_count();
    for (int c = 0; c < d; ++c) {
      const auto& lo = coeffs_[i][c];
      const auto* hi = w == 0.0 ? nullptr : &coeffs_[i + 1][c];
      Complex s = 0.0;
      for (std::size_t flat = 0; flat < nodes; ++flat) {
        Complex coef = lo[flat];
        if (hi) coef = (1.0 - w) * coef + w * (*hi)[flat];
        std::size_t rest = flat;
        Complex basis = 1.0;
        for (int a = 0; a < d; ++a) {
          basis *= e[a][rest % M];
          rest /= M;
        }
        s += coef * basis;
      }
      v[c] = s.real();
    }
    return v;
  }

 private:
  /// Snapshot index and weight such that t = (1-w) t_i + w t_{i+1}.
  std::pair<std::size_t, double> bracket(double t) const {
    const double span = times_.back() - times_.front();
    const double tol = 1e-12 * std::max(1.0, std::abs(span));
    if (t < times_.front() - tol || t > times_.back() + tol)
      throw std::out_of_range("time " + std::to_string(t) + " outside the snapshot range [" +
                              std::to_string(times_.front()) + ", " + std::to_string(times_.back()) + "]");
    if (times_.size() == 1 || t <= times_.front()) return {0, 0.0};
    if (t >= times_.back()) return {times_.size() - 1, 0.0};
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
    const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
    return {i, w};
  }

  void ensure_coefficients() const {
    std::call_once(cache_->once, [this] {
      auto& coeffs_ = cache_->coeffs;
      const double scale = 1.0 / static_cast<double>(grid_.node_count());
      coeffs_.resize(snapshots_.size());
      for (std::size_t s = 0; s < snapshots_.size(); ++s) {
        for (int a = 0; a < grid_.dim; ++a) {
          auto& c = coeffs_[s][a];
          c.assign(snapshots_[s].components[a].begin(), snapshots_[s].components[a].end());
          fft_inplace(c, grid_.dim, grid_.points, -1);
          for (auto& z : c) z *= scale;
        }
      }
    });
  }

  FourierGrid grid_;
  std::vector<double> times_;
  std::vector<NodalVectorField> snapshots_;
  // Full DFT coefficients per snapshot and component, built on first use.
  struct Cache {
    std::once_flag once;
    std::vector<std::array<std::vector<Complex>, kMaxDim>> coeffs;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// Central-difference divergence at a point (diagnostic).
inline double fd_divergence(const VelocityField& flow, double t, const Point& x, double h = 1e-5) {
  double div = 0.0;
  for (int a = 0; a < flow.dim(); ++a) {
    Point p = x, m = x;
    p[a] += h;
    m[a] -= h;
    div += (flow.eval_point(t, p)[a] - flow.eval_point(t, m)[a]) / (2.0 * h);
  }
  return div;
}

}  // namespace cohset
