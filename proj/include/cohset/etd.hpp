#pragma once

#include <cohset/fft.hpp>

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace cohset {

/// Per-mode ETDRK4 coefficients for a diagonal linear part L and step h.
///
/// The phi-functions are evaluated as means over a circle of radius r
/// around each z = hL (trapezoidal rule for the Cauchy integral), which
/// avoids the cancellation of the closed forms near z = 0.
struct EtdCoefficients {
  double h = 0.0;
  std::vector<double> e;       // e^{hL}
  std::vector<double> e_half;  // e^{hL/2}
  std::vector<double> q;       // h * mean((e^{z/2} - 1) / z)
  std::vector<double> f1;      // h * mean((-4 - z + e^z (4 - 3z + z^2)) / z^3)
  std::vector<double> f2;      // h * mean(( 2 + z + e^z (-2 + z)) / z^3)
  std::vector<double> f3;      // h * mean((-4 - 3z - z^2 + e^z (4 - z)) / z^3)
  double max_imag_residue = 0.0;
};

inline EtdCoefficients etd_coefficients(std::span<const double> l_diag, double h, int contour_points = 32,
                                        double radius = 1.0) {
  if (!(h > 0.0)) throw std::invalid_argument("ETD step size must be positive");
  if (contour_points < 1) throw std::invalid_argument("contour needs at least one point");
  if (!(radius > 0.0)) throw std::invalid_argument("contour radius must be positive");

  std::vector<Complex> roots(contour_points);
  for (int j = 0; j < contour_points; ++j)
    roots[j] = std::polar(radius, 2.0 * std::numbers::pi * (j + 0.5) / contour_points);

  EtdCoefficients c;
  c.h = h;
  const std::size_t n = l_diag.size();
  c.e.resize(n);
  c.e_half.resize(n);
  c.q.resize(n);
  c.f1.resize(n);
  c.f2.resize(n);
  c.f3.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double hl = h * l_diag[i];
    c.e[i] = std::exp(hl);
    c.e_half[i] = std::exp(0.5 * hl);
    Complex q = 0.0, a = 0.0, b = 0.0, g = 0.0;
    for (const auto& r : roots) {
      const Complex z = hl + r;
      const Complex ez = std::exp(z);
      const Complex z3 = z * z * z;
      q += (std::exp(0.5 * z) - 1.0) / z;
      a += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
      b += (2.0 + z + ez * (z - 2.0)) / z3;
      g += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
    }
    const double inv = h / contour_points;
    q *= inv;
    a *= inv;
    b *= inv;
    g *= inv;
    for (const auto* v : {&q, &a, &b, &g})
      c.max_imag_residue = std::max(c.max_imag_residue, std::abs(v->imag()));
    c.q[i] = q.real();
    c.f1[i] = a.real();
    c.f2[i] = b.real();
    c.f3[i] = g.real();
  }
  return c;
}

}  // namespace cohset
