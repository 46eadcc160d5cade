#include "rflaf/kernel.hpp"

#include <cmath>
#include <fstream>

#include "rflaf/errors.hpp"

namespace rflaf {

FeatureMatrix feature_matrix(const Matrix& X, const Matrix& W,
                             const Vector& q_diag,
                             const ActivationCoeffs& coeffs,
                             const BasisConfig& cfg) {
  cfg.validate();
  if (X.cols() != W.rows())
    throw std::invalid_argument("feature_matrix: X columns must match W rows");
  if (coeffs.a.size() != cfg.grid_size())
    throw std::invalid_argument("feature_matrix: coefficient/grid length mismatch");
  const Index s = W.cols();
  if (q_diag.size() != 0 && q_diag.size() != s)
    throw std::invalid_argument("feature_matrix: weight diagonal length mismatch");

  const Matrix proj = X * W; // n x s
  if (!proj.allFinite()) {
    for (Index j = 0; j < proj.cols(); ++j)
      for (Index i = 0; i < proj.rows(); ++i)
        if (!std::isfinite(proj(i, j)))
          throw NumericError("feature_matrix: non-finite projection at sample " +
                             std::to_string(i) + ", feature " + std::to_string(j));
  }

  const int N = cfg.grid_size();
  Vector b(N);
  FeatureMatrix fm;
  fm.Z.resize(proj.rows(), s);
  for (Index j = 0; j < s; ++j) {
    const double qj = q_diag.size() ? q_diag[j] : 1.0;
    for (Index i = 0; i < proj.rows(); ++i) {
      eval_basis_into(cfg, proj(i, j), b.data());
      fm.Z(i, j) = qj * b.dot(coeffs.a);
    }
  }
  return fm;
}

Matrix gram_empirical(const Matrix& Z, int s) {
  if (s != Z.cols())
    throw std::invalid_argument("gram_empirical: s must equal the column count");
  return (Z * Z.transpose()) / static_cast<double>(s);
}

double effective_dimension(const Vector& eigenvalues, double lambda) {
  if (lambda < 0.0)
    throw std::invalid_argument("effective_dimension: lambda must be >= 0");
  const double top = eigenvalues.size() ? eigenvalues.maxCoeff() : 0.0;
  const double clamp_floor = -1e-10 * std::max(top, 0.0);
  double d = 0.0;
  for (Index m = 0; m < eigenvalues.size(); ++m) {
    double ev = eigenvalues[m];
    if (ev < 0.0) {
      if (ev < clamp_floor)
        throw NumericError("effective_dimension: eigenvalue " + std::to_string(ev) +
                           " below clamp tolerance");
      ev = 0.0;
    }
    if (lambda == 0.0)
      d += ev > 0.0 ? 1.0 : 0.0; // rank
    else
      d += ev / (ev + lambda);
  }
  return d;
}

double effective_dimension_of_features(const Matrix& Z, int s, double lambda) {
  if (s < 1) throw std::invalid_argument("effective_dimension_of_features: s < 1");
  const Index n = Z.rows();
  Matrix small = Z.cols() <= n ? Matrix(Z.transpose() * Z) : Matrix(Z * Z.transpose());
  small /= static_cast<double>(s) * static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(small);
  if (es.info() != Eigen::Success)
    throw NumericError("effective_dimension_of_features: eigendecomposition failed");
  return effective_dimension(es.eigenvalues().reverse(), lambda);
}

GramSummary gram_summary(const Matrix& gram, int n, double lambda) {
  if (gram.rows() != gram.cols())
    throw std::invalid_argument("gram_summary: matrix must be square");
  if (n < 1) throw std::invalid_argument("gram_summary: n must be >= 1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram / static_cast<double>(n));
  if (es.info() != Eigen::Success)
    throw NumericError("gram_summary: eigendecomposition failed");
  Vector ev = es.eigenvalues().reverse(); // non-increasing
  GramSummary summary;
  summary.lambda = lambda;
  summary.d_eff = effective_dimension(ev, lambda);
  summary.eigenvalues = ev.cwiseMax(0.0);
  summary.lambda_above_top =
      ev.size() > 0 && lambda > ev[0]; // Assumption-2.2 style warning flag
  return summary;
}

void SpectrumRegime::validate() const {
  switch (kind) {
    case Kind::FiniteRank:
      if (rank < 1) throw std::invalid_argument("spectrum: rank must be >= 1");
      break;
    case Kind::Exponential:
      if (!(A > 0.0 && A < 1.0))
        throw std::invalid_argument("spectrum: exponential base must be in (0,1)");
      if (!(c1 > 0.0)) throw std::invalid_argument("spectrum: c1 must be positive");
      break;
    case Kind::Polynomial:
      if (!(t > 1.0)) throw std::invalid_argument("spectrum: polynomial t must be > 1");
      if (!(c2 > 0.0)) throw std::invalid_argument("spectrum: c2 must be positive");
      break;
    case Kind::Harmonic:
      if (!(c3 > 0.0)) throw std::invalid_argument("spectrum: c3 must be positive");
      break;
  }
}

Vector SpectrumRegime::profile(int n) const {
  validate();
  if (n < 1) throw std::invalid_argument("spectrum profile: n must be >= 1");
  Vector ev(n);
  for (int m = 1; m <= n; ++m) {
    switch (kind) {
      case Kind::FiniteRank: ev[m - 1] = m <= rank ? 1.0 : 0.0; break;
      case Kind::Exponential: ev[m - 1] = c1 * std::pow(A, m); break;
      case Kind::Polynomial: ev[m - 1] = c2 * std::pow(m, -t); break;
      case Kind::Harmonic: ev[m - 1] = c3 / m; break;
    }
  }
  return ev;
}

SpectrumRegime SpectrumRegime::finite_rank(int r) {
  SpectrumRegime s;
  s.kind = Kind::FiniteRank;
  s.rank = r;
  s.validate();
  return s;
}

SpectrumRegime SpectrumRegime::exponential(double A, double c1) {
  SpectrumRegime s;
  s.kind = Kind::Exponential;
  s.A = A;
  s.c1 = c1;
  s.validate();
  return s;
}

SpectrumRegime SpectrumRegime::polynomial(double t, double c2) {
  SpectrumRegime s;
  s.kind = Kind::Polynomial;
  s.t = t;
  s.c2 = c2;
  s.validate();
  return s;
}

SpectrumRegime SpectrumRegime::harmonic(double c3) {
  SpectrumRegime s;
  s.kind = Kind::Harmonic;
  s.c3 = c3;
  s.validate();
  return s;
}

double spectrum_bound(const SpectrumRegime& regime, double lambda, int n,
                      double C) {
  regime.validate();
  if (!(lambda > 0.0))
    throw std::invalid_argument("spectrum_bound: lambda must be positive");
  switch (regime.kind) {
    case SpectrumRegime::Kind::FiniteRank:
      return C * regime.rank;
    case SpectrumRegime::Kind::Exponential:
      return C * std::log(1.0 / lambda);
    case SpectrumRegime::Kind::Polynomial:
      return C * std::pow(1.0 / lambda, 1.0 / regime.t);
    case SpectrumRegime::Kind::Harmonic:
      return (regime.c3 / lambda) * std::log(static_cast<double>(n)) + regime.c3;
  }
  return 0.0;
}

void save_eigenvalues_csv(const GramSummary& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_eigenvalues_csv: cannot open " + path);
  out.precision(17);
  out << "index,eigenvalue\n";
  for (Index m = 0; m < summary.eigenvalues.size(); ++m)
    out << (m + 1) << "," << summary.eigenvalues[m] << "\n";
}

} // namespace rflaf
