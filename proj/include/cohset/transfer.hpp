#pragma once

#include <cohset/errors.hpp>
#include <cohset/fokker_planck.hpp>
#include <cohset/parallel.hpp>
#include <cohset/spectral.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohset {

/// Real orthonormal trigonometric basis of V_N: the constant 1/sqrt(m(X)),
/// then sqrt(2/m(X)) cos(<kappa,x>), sqrt(2/m(X)) sin(<kappa,x>) for each
/// mode k in the half-space where the last nonzero component is positive.
class RealBasis {
 public:
  explicit RealBasis(const FourierGrid& g) : grid_(g) {
    const std::size_t zero = g.mode_flat({0, 0, 0});
    entries_.push_back({zero, Kind::constant});
    for (std::size_t i = 0; i < g.mode_count(); ++i) {
      const auto k = g.mode_index(i);
      int lead = 0;
      for (int a = g.dim - 1; a >= 0 && lead == 0; --a) lead = k[a];
      if (lead > 0) {
        entries_.push_back({i, Kind::cosine});
        entries_.push_back({i, Kind::sine});
      }
    }
  }

  std::size_t size() const { return entries_.size(); }
  const FourierGrid& grid() const { return grid_; }

  /// Complex coefficients of basis function j.
  SpectralField function(std::size_t j) const {
    auto f = SpectralField::zeros(grid_);
    const auto& e = entries_.at(j);
    const double m = grid_.volume();
    if (e.kind == Kind::constant) {
      f.coeffs[e.mode] = 1.0 / std::sqrt(m);
      return f;
    }
    const std::size_t neg = grid_.mode_flat(negate(grid_.mode_index(e.mode)));
    const double s = 1.0 / std::sqrt(2.0 * m);
    if (e.kind == Kind::cosine) {
      f.coeffs[e.mode] = s;
      f.coeffs[neg] = s;
    } else {
      f.coeffs[e.mode] = Complex(0.0, -s);
      f.coeffs[neg] = Complex(0.0, s);
    }
    return f;
  }

  /// Complex coefficients of sum_j a_j psi_j.
  SpectralField synthesize(const Eigen::Ref<const Eigen::VectorXd>& a) const {
    if (static_cast<std::size_t>(a.size()) != size()) throw std::invalid_argument("basis coordinate vector has wrong size");
    auto f = SpectralField::zeros(grid_);
    for (std::size_t j = 0; j < size(); ++j) {
      const auto psi = function(j);
      const auto& e = entries_[j];
      f.coeffs[e.mode] += a[j] * psi.coeffs[e.mode];
      if (e.kind != Kind::constant) {
        const std::size_t neg = grid_.mode_flat(negate(grid_.mode_index(e.mode)));
        f.coeffs[neg] += a[j] * psi.coeffs[neg];
      }
    }
    return f;
  }

  /// Basis coordinates of a real function given by its complex coefficients.
  Eigen::VectorXd analyze(const SpectralField& f) const {
    Eigen::VectorXd a(size());
    const double m = grid_.volume();
    for (std::size_t j = 0; j < size(); ++j) {
      const auto& e = entries_[j];
      const Complex c = f.coeffs[e.mode];
      if (e.kind == Kind::constant) a[j] = std::sqrt(m) * c.real();
      else if (e.kind == Kind::cosine) a[j] = std::sqrt(2.0 * m) * c.real();
      else a[j] = -std::sqrt(2.0 * m) * c.imag();
    }
    return a;
  }

 private:
  enum class Kind { constant, cosine, sine };
  struct Entry {
    std::size_t mode;
    Kind kind;
  };
  static MultiIndex negate(MultiIndex k) {
    for (auto& v : k) v = -v;
    return k;
  }

  FourierGrid grid_;
  std::vector<Entry> entries_;
};

/// Collocation matrix of the Fokker-Planck transfer operator. Column j holds
/// sqrt(w) * (P psi_j)(x_i) at the points^d nodes, w the uniform quadrature
/// weight, so that singular values approximate those of the operator on L2.
struct TransferMatrix {
  Eigen::MatrixXd matrix;
  FourierGrid grid;
  FpConfig config;
  std::string flow;
  /// Largest conjugate-symmetry violation seen in an evolved column.
  double max_asymmetry = 0.0;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
};

inline TransferMatrix assemble_transfer(const FourierGrid& grid, const VelocityField& flow, const FpConfig& cfg,
                                        unsigned threads = 0) {
  cfg.validate();
  const RealBasis basis(grid);
  const VelocitySchedule schedule(flow, grid, cfg);
  std::optional<EtdCoefficients> etd;
  if (cfg.scheme == TimeScheme::etdrk4)
    etd = etd_coefficients(detail::heat_diagonal(grid, cfg.epsilon), cfg.step(), cfg.contour_points,
                           cfg.contour_radius);

  TransferMatrix P;
  P.grid = grid;
  P.config = cfg;
  P.flow = flow.describe();
  P.matrix.resize(static_cast<Eigen::Index>(grid.node_count()), static_cast<Eigen::Index>(basis.size()));
  std::vector<double> asym(basis.size(), 0.0);
  const double root_w = std::sqrt(grid.quad_weight());

  parallel_for(basis.size(), threads, [&](std::size_t j) {
    SpectralField u;
    try {
      u = evolve(basis.function(j), cfg, schedule, etd ? &*etd : nullptr);
    } catch (const NumericalError& e) {
      throw NumericalError("column " + std::to_string(j) + ": " + e.what());
    }
    asym[j] = conjugate_asymmetry(u);
    const auto nodal = inverse(u, grid.points);
    for (std::size_t i = 0; i < nodal.values.size(); ++i)
      P.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = root_w * nodal.values[i];
  });
  for (double a : asym) P.max_asymmetry = std::max(P.max_asymmetry, a);
  return P;
}

/// Leading singular triples, sigma descending. Right vectors are columns of
/// `right`, left vectors columns of `left`. Each right vector is flipped so
/// its entry of largest magnitude is positive; the left vector follows.
struct SingularTriples {
  Eigen::VectorXd sigma;
  Eigen::MatrixXd right;
  Eigen::MatrixXd left;

  Eigen::Index count() const { return sigma.size(); }
};

inline SingularTriples singular_triples(const Eigen::MatrixXd& A, Eigen::Index n) {
  const Eigen::Index k = std::min(A.rows(), A.cols());
  if (n < 1 || n > k)
    throw std::out_of_range("requested " + std::to_string(n) + " singular triples, matrix admits 1.." +
                            std::to_string(k));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SingularTriples t;
  t.sigma = svd.singularValues().head(n);
  t.right = svd.matrixV().leftCols(n);
  t.left = svd.matrixU().leftCols(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    t.right.col(i).cwiseAbs().maxCoeff(&arg);
    if (t.right(arg, i) < 0.0) {
      t.right.col(i) *= -1.0;
      t.left.col(i) *= -1.0;
    }
  }
  return t;
}

inline SingularTriples singular_triples(const TransferMatrix& P, Eigen::Index n) { return singular_triples(P.matrix, n); }

/// Nodal values of the unit-norm function with basis coordinates v.
inline RealField vector_to_field(const FourierGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& v, int plot_points) {
  const RealBasis basis(grid);
  return inverse(basis.synthesize(v), plot_points);
}

/// A left singular vector (weighted nodal values on grid's nodes) as a
/// function, optionally resampled trigonometrically to plot_points.
inline RealField left_vector_to_field(const FourierGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& u,
                                      int plot_points) {
  if (static_cast<std::size_t>(u.size()) != grid.node_count())
    throw std::invalid_argument("left vector does not match the node grid");
  const double inv = 1.0 / std::sqrt(grid.quad_weight());
  RealField f = RealField::zeros(grid);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = inv * u[static_cast<Eigen::Index>(i)];
  if (plot_points == grid.points) return f;
  return inverse(forward(f), plot_points);
}

inline void write_transfer_matrix(const TransferMatrix& P, const std::string& path) {
  nlohmann::json h;
  h["format"] = "cohset-transfer-matrix";
  h["version"] = 1;
  h["rows"] = P.rows();
  h["cols"] = P.cols();
  h["dim"] = P.grid.dim;
  h["modes"] = P.grid.modes;
  h["points"] = P.grid.points;
  h["lengths"] = std::vector<double>(P.grid.lengths.begin(), P.grid.lengths.begin() + P.grid.dim);
  h["epsilon"] = P.config.epsilon;
  h["t0"] = P.config.t0;
  h["t1"] = P.config.t1;
  h["steps"] = P.config.steps;
  h["scheme"] = P.config.scheme == TimeScheme::rk4 ? "rk4" : "etdrk4";
  h["flow"] = P.flow;
  h["encoding"] = "f64le-row-major";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << h.dump() << '\n';
  for (Eigen::Index r = 0; r < P.rows(); ++r)
    for (Eigen::Index c = 0; c < P.cols(); ++c) {
      const double v = P.matrix(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  if (!out) throw std::runtime_error("failed writing " + path);
}

inline TransferMatrix read_transfer_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  const auto h = nlohmann::json::parse(line);
  if (h.at("format") != "cohset-transfer-matrix") throw std::runtime_error(path + " is not a transfer matrix file");
  TransferMatrix P;
  const auto lengths = h.at("lengths").get<std::vector<double>>();
  P.grid = FourierGrid::make(h.at("dim"), h.at("modes"), h.at("points"), lengths);
  P.config.epsilon = h.at("epsilon");
  P.config.t0 = h.at("t0");
  P.config.t1 = h.at("t1");
  P.config.steps = h.at("steps");
  P.config.scheme = h.at("scheme") == "rk4" ? TimeScheme::rk4 : TimeScheme::etdrk4;
  P.flow = h.at("flow");
  const Eigen::Index rows = h.at("rows"), cols = h.at("cols");
  P.matrix.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      P.matrix(r, c) = v;
    }
  if (!in) throw std::runtime_error(path + " is truncated");
  return P;
}

}  // namespace cohset
