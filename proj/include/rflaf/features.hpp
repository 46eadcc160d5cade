#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rflaf/types.hpp"

namespace rflaf {

/// Pool of spectral features, columns w_m drawn i.i.d. from N(0, I_d).
/// Reconstructible from (dim, size, seed).
struct FeaturePool {
  Matrix W; // d x s
  int dim = 0;
  int size = 0;
  std::uint64_t seed = 0;
};

FeaturePool sample_pool(int d, int s, std::uint64_t seed);

/// Ridge leverage scores of pool columns: raw_i is the i-th diagonal entry of
/// Z^T Z ((1/s) Z^T Z + n lambda I)^-1, q its normalization.
struct LeverageWeights {
  Vector q;
  Vector raw;
  double lambda = 0.0;
};

LeverageWeights leverage_weights(const Matrix& Z, double lambda, int n);

/// Same scores through the n x n quadratic form z_i^T (K + n lambda I)^-1 z_i
/// with K = (1/s) Z Z^T; algebraically identical, used as a cross-check and
/// as the cheap path when n < s.
Vector leverage_scores_dual(const Matrix& Z, double lambda, int n);

/// Importance-weight convention for the diagonal matrix Q.
/// Section24 treats the pool's empirical density as 1/s, Q_ii =
/// sqrt(1/(s q_i)), which keeps the expected resampled Gram equal to the pool
/// Gram. Algo1Literal uses Q_ii = sqrt(1/q_i) as printed in the sampling step.
enum class QMode { Section24, Algo1Literal };

struct WeightedFeatures {
  Matrix W_tilde;                  // d x S
  Vector q_diag;                   // S positive weights
  std::vector<int> source_indices; // pool column of each feature
};

WeightedFeatures resample_weighted(const FeaturePool& pool,
                                   const LeverageWeights& weights, int S,
                                   std::uint64_t seed,
                                   QMode mode = QMode::Section24);

void save_weighted_features(const WeightedFeatures& wf, const std::string& path);
WeightedFeatures load_weighted_features(const std::string& path);

} // namespace rflaf
