#pragma once

#include <cohset/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohset {

/// CSV grid: "# d N M L_0 .. L_{d-1}", then "x,y(,z),value" per node,
/// axis 0 fastest. Coordinates are shifted by `offset` grid spacings (0.5
/// puts piecewise-constant box values at box centres).
inline void write_csv_grid(const RealField& f, const std::string& path, double offset = 0.0) {
  const auto& g = f.grid;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  char buf[64];
  out << "# " << g.dim << ' ' << g.modes << ' ' << g.points;
  for (int a = 0; a < g.dim; ++a) {
    std::snprintf(buf, sizeof buf, " %.17g", g.lengths[a]);
    out << buf;
  }
  out << '\n';
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const auto p = g.node_point(i);
    for (int a = 0; a < g.dim; ++a) {
      std::snprintf(buf, sizeof buf, "%.17g,", p[a] + offset * g.spacing(a));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", f.values[i]);
    out << buf;
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

inline RealField read_csv_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::istringstream head(line);
  std::string hash;
  int dim = 0, modes = 0, points = 0;
  head >> hash >> dim >> modes >> points;
  std::vector<double> lengths(static_cast<std::size_t>(std::max(dim, 0)));
  for (auto& l : lengths) head >> l;
  if (hash != "#" || !head) throw std::runtime_error(path + " has no grid header");
  auto f = RealField::zeros(FourierGrid::make(dim, modes, points, lengths));
  for (auto& v : f.values) {
    if (!std::getline(in, line)) throw std::runtime_error(path + " is truncated");
    v = std::strtod(line.c_str() + line.rfind(',') + 1, nullptr);
  }
  return f;
}

namespace detail {

inline void write_pgm_bytes(const std::string& path, int width, int height, const std::vector<std::uint8_t>& px) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

/// Node indices of the image, top row = largest y. For 3D grids the slice
/// through the middle of axis 2 is shown.
template <class Fn>
std::vector<std::uint8_t> raster(const FourierGrid& g, Fn&& pixel) {
  const int w = g.points, h = g.dim >= 2 ? g.points : 1;
  const std::size_t plane = static_cast<std::size_t>(g.points) * static_cast<std::size_t>(h);
  const std::size_t offset = g.dim == 3 ? static_cast<std::size_t>(g.points / 2) * plane : 0;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t node = offset + static_cast<std::size_t>(h - 1 - r) * g.points + c;
      px[static_cast<std::size_t>(r) * w + c] = pixel(node);
    }
  return px;
}

}  // namespace detail

/// 8-bit heatmap scaled symmetrically: -max|f| -> 0, 0 -> 128, max|f| -> 255.
inline void write_pgm(const RealField& f, const std::string& path) {
  double s = 0.0;
  for (double v : f.values) s = std::max(s, std::abs(v));
  if (s == 0.0) s = 1.0;
  const auto px = detail::raster(f.grid, [&](std::size_t i) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(127.5 * (f.values[i] / s + 1.0), 0.0, 255.0)));
  });
  detail::write_pgm_bytes(path, f.grid.points, f.grid.dim >= 2 ? f.grid.points : 1, px);
}

/// Label or mask image: value v in [0, levels) maps to grey 255 v / (levels-1).
inline void write_pgm_labels(const FourierGrid& g, const std::vector<int>& labels, int levels, const std::string& path) {
  if (labels.size() != g.node_count()) throw std::invalid_argument("label field does not match the grid");
  const double step = levels > 1 ? 255.0 / (levels - 1) : 255.0;
  const auto px = detail::raster(g, [&](std::size_t i) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(labels[i] * step, 0.0, 255.0)));
  });
  detail::write_pgm_bytes(path, g.points, g.dim >= 2 ? g.points : 1, px);
}

}  // namespace cohset
