#pragma once

#include <cohset/flows.hpp>

#include <json.hpp>

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohset {

enum class FlowEncoding { f64le, csv };

/// Gridded flow file: one JSON header line, then for each snapshot and each
/// velocity component the node values (axis-0 fastest), either as raw
/// little-endian doubles or as one comma-separated line in %.17g.
inline void write_gridded_flow(const GriddedFlow& flow, const std::string& path,
                               FlowEncoding enc = FlowEncoding::f64le) {
  static_assert(std::endian::native == std::endian::little, "binary flow files assume a little-endian host");
  const auto& g = flow.grid();
  nlohmann::json h;
  h["format"] = "cohset-gridded-flow";
  h["version"] = 1;
  h["dim"] = g.dim;
  h["points"] = g.points;
  h["lengths"] = std::vector<double>(g.lengths.begin(), g.lengths.begin() + g.dim);
  h["times"] = flow.times();
  h["encoding"] = enc == FlowEncoding::f64le ? "f64le" : "csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << h.dump() << '\n';
  char buf[32];
  for (const auto& s : flow.snapshots())
    for (int a = 0; a < g.dim; ++a) {
      const auto& c = s.components[a];
      if (enc == FlowEncoding::f64le) {
        out.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(c.size() * sizeof(double)));
      } else {
        for (std::size_t j = 0; j < c.size(); ++j) {
          std::snprintf(buf, sizeof buf, "%.17g", c[j]);
          if (j) out << ',';
          out << buf;
        }
        out << '\n';
      }
    }
  if (!out) throw std::runtime_error("failed writing " + path);
}

inline std::shared_ptr<GriddedFlow> read_gridded_flow(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open flow file " + path);
  std::string line;
  std::getline(in, line);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error(path + " has no valid flow header");
  }
  if (h.value("format", "") != "cohset-gridded-flow") throw std::runtime_error(path + " is not a gridded flow file");
  if (h.at("version") != 1) throw std::runtime_error(path + ": unsupported flow file version");
  const int dim = h.at("dim");
  const int points = h.at("points");
  const auto lengths = h.at("lengths").get<std::vector<double>>();
  auto times = h.at("times").get<std::vector<double>>();
  const std::string enc = h.at("encoding");
  // Only geometry and node count matter for a gridded flow.
  const auto g = FourierGrid::make(dim, 1, points, lengths);

  std::vector<NodalVectorField> snaps;
  snaps.reserve(times.size());
  for (std::size_t s = 0; s < times.size(); ++s) {
    auto v = NodalVectorField::zeros(g);
    for (int a = 0; a < dim; ++a) {
      auto& c = v.components[a];
      if (enc == "f64le") {
        in.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(c.size() * sizeof(double)));
      } else if (enc == "csv") {
        if (!std::getline(in, line)) break;
        std::istringstream row(line);
        std::string cell;
        std::size_t j = 0;
        while (std::getline(row, cell, ',') && j < c.size()) c[j++] = std::strtod(cell.c_str(), nullptr);
        if (j != c.size()) throw std::runtime_error(path + ": short snapshot row");
      } else {
        throw std::runtime_error(path + ": unknown encoding " + enc);
      }
      if (!in) throw std::runtime_error(path + " is truncated");
    }
    snaps.push_back(std::move(v));
  }
  return std::make_shared<GriddedFlow>(g, std::move(times), std::move(snaps));
}

}  // namespace cohset
