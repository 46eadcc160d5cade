#include "rflaf/features.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "rflaf/errors.hpp"
#include "rflaf/rng.hpp"

namespace rflaf {

FeaturePool sample_pool(int d, int s, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("sample_pool: dimension must be >= 1");
  if (s < 1) throw std::invalid_argument("sample_pool: pool size must be >= 1");
  FeaturePool pool;
  pool.dim = d;
  pool.size = s;
  pool.seed = seed;
  pool.W.resize(d, s);
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < d; ++i) pool.W(i, j) = gauss(rng);
  return pool;
}

LeverageWeights leverage_weights(const Matrix& Z, double lambda, int n) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("leverage_weights: lambda must be positive");
  if (n < 1) throw std::invalid_argument("leverage_weights: n must be >= 1");
  if (!Z.allFinite()) throw NumericError("leverage_weights: non-finite feature matrix");
  const Index s = Z.cols();

  Vector raw(s);
  if (s <= Z.rows()) {
    Matrix gram = Z.transpose() * Z; // s x s
    Matrix shifted = gram / static_cast<double>(s);
    shifted.diagonal().array() += n * lambda;
    Eigen::LDLT<Matrix> ldlt(shifted);
    if (ldlt.info() != Eigen::Success)
      throw NumericError("leverage_weights: factorization failed");
    raw = (ldlt.solve(gram)).diagonal();
  } else {
    raw = leverage_scores_dual(Z, lambda, n);
  }
  raw = raw.cwiseMax(0.0); // PSD product; clip rounding negatives

  const double total = raw.sum();
  if (!(total > 0.0))
    throw DegeneratePoolError("leverage_weights: all leverage scores are zero");

  LeverageWeights lw;
  lw.raw = raw;
  lw.q = raw / total;
  lw.lambda = lambda;
  return lw;
}

Vector leverage_scores_dual(const Matrix& Z, double lambda, int n) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("leverage_scores_dual: lambda must be positive");
  const Index s = Z.cols();
  Matrix K = (Z * Z.transpose()) / static_cast<double>(s);
  K.diagonal().array() += n * lambda;
  Eigen::LDLT<Matrix> ldlt(K);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("leverage_scores_dual: factorization failed");
  Matrix solved = ldlt.solve(Z); // (K + n lambda I)^-1 Z
  Vector raw(s);
  for (Index j = 0; j < s; ++j) raw[j] = Z.col(j).dot(solved.col(j));
  return raw;
}

WeightedFeatures resample_weighted(const FeaturePool& pool,
                                   const LeverageWeights& weights, int S,
                                   std::uint64_t seed, QMode mode) {
  if (S < 1) throw std::invalid_argument("resample_weighted: S must be >= 1");
  if (weights.q.size() != pool.size)
    throw std::invalid_argument("resample_weighted: weights do not match pool");
  const int s = pool.size;

  auto rng = make_rng(seed);
  std::discrete_distribution<int> pick(weights.q.data(), weights.q.data() + s);

  WeightedFeatures wf;
  wf.W_tilde.resize(pool.dim, S);
  wf.q_diag.resize(S);
  wf.source_indices.resize(S);
  for (int m = 0; m < S; ++m) {
    const int idx = pick(rng);
    wf.source_indices[m] = idx;
    wf.W_tilde.col(m) = pool.W.col(idx);
    const double qi = weights.q[idx];
    wf.q_diag[m] = mode == QMode::Section24 ? std::sqrt(1.0 / (s * qi))
                                            : std::sqrt(1.0 / qi);
  }
  return wf;
}

void save_weighted_features(const WeightedFeatures& wf, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_weighted_features: cannot open " + path);
  out.precision(17);
  const Index d = wf.W_tilde.rows(), S = wf.W_tilde.cols();
  out << d << "," << S << "\n";
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < S; ++j) out << (j ? "," : "") << wf.W_tilde(i, j);
    out << "\n";
  }
  for (Index j = 0; j < S; ++j) out << (j ? "," : "") << wf.q_diag[j];
  out << "\n";
  for (Index j = 0; j < S; ++j) out << (j ? "," : "") << wf.source_indices[j];
  out << "\n";
}

namespace {
std::vector<double> parse_csv_line(const std::string& line) {
  std::vector<double> vals;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
  return vals;
}
} // namespace

WeightedFeatures load_weighted_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_weighted_features: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw DataError("load_weighted_features: empty file " + path);
  const auto header = parse_csv_line(line);
  if (header.size() != 2)
    throw DataError("load_weighted_features: bad header in " + path);
  const Index d = static_cast<Index>(header[0]), S = static_cast<Index>(header[1]);
  WeightedFeatures wf;
  wf.W_tilde.resize(d, S);
  for (Index i = 0; i < d; ++i) {
    if (!std::getline(in, line))
      throw DataError("load_weighted_features: truncated matrix in " + path);
    const auto row = parse_csv_line(line);
    if (static_cast<Index>(row.size()) != S)
      throw DataError("load_weighted_features: bad row width in " + path);
    for (Index j = 0; j < S; ++j) wf.W_tilde(i, j) = row[j];
  }
  if (!std::getline(in, line))
    throw DataError("load_weighted_features: missing weights in " + path);
  const auto qs = parse_csv_line(line);
  wf.q_diag = Eigen::Map<const Vector>(qs.data(), static_cast<Index>(qs.size()));
  if (!std::getline(in, line))
    throw DataError("load_weighted_features: missing indices in " + path);
  for (double v : parse_csv_line(line))
    wf.source_indices.push_back(static_cast<int>(v));
  return wf;
}

} // namespace rflaf
