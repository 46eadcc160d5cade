#pragma once

#include <string>

#include "rflaf/basis.hpp"
#include "rflaf/types.hpp"

namespace rflaf {

/// Nonlinear in-sample feature matrix Z_{ij} = Q_jj * sigma_a(w_j^T x_i).
struct FeatureMatrix {
  Matrix Z; // n x s
  struct Provenance {
    std::string dataset, pool, activation, weights;
  } provenance;
};

/// Z = sigma_a(X W) diag(q_diag). Pass q_diag of size 0 for unit weights.
FeatureMatrix feature_matrix(const Matrix& X, const Matrix& W,
                             const Vector& q_diag,
                             const ActivationCoeffs& coeffs,
                             const BasisConfig& cfg);

/// Empirical Gram (1/s) Z Z^T; s must equal Z's column count.
Matrix gram_empirical(const Matrix& Z, int s);

struct GramSummary {
  Vector eigenvalues; // of K/n, non-increasing, clamped to >= 0
  double lambda = 0.0;
  double d_eff = 0.0;
  bool lambda_above_top = false; // regularization exceeds top eigenvalue
};

/// Eigendecomposition of gram/n plus the effective dimension at lambda.
GramSummary gram_summary(const Matrix& gram, int n, double lambda);

/// sum_m ev_m / (ev_m + lambda) over eigenvalues of K/n. lambda = 0 returns
/// the rank. Negative eigenvalues beyond -1e-10 * max are a NumericError;
/// closer ones are clamped to zero.
double effective_dimension(const Vector& eigenvalues, double lambda);

/// Effective dimension of (1/s) Z Z^T / n at lambda, computed through
/// whichever side of the Gram is smaller.
double effective_dimension_of_features(const Matrix& Z, int s, double lambda);

/// Assumed eigenvalue decay of the normalized Gram, with the constants of the
/// corresponding effective-dimension bounds.
struct SpectrumRegime {
  enum class Kind { FiniteRank, Exponential, Polynomial, Harmonic };
  Kind kind = Kind::Exponential;
  int rank = 1;      // FiniteRank
  double A = 0.5;    // Exponential base, in (0,1)
  double c1 = 1.0;   // Exponential scale
  double t = 2.0;    // Polynomial exponent, > 1
  double c2 = 1.0;   // Polynomial scale
  double c3 = 1.0;   // Harmonic scale

  void validate() const;

  /// Planted profile ev_m, m = 1..n.
  Vector profile(int n) const;

  static SpectrumRegime finite_rank(int r);
  static SpectrumRegime exponential(double A, double c1 = 1.0);
  static SpectrumRegime polynomial(double t, double c2 = 1.0);
  static SpectrumRegime harmonic(double c3 = 1.0);
};

/// Upper bound on the effective dimension for the given decay regime:
/// FiniteRank C*r, Exponential C*log(1/lambda), Polynomial C*(1/lambda)^(1/t),
/// Harmonic (c3/lambda)*log(n) + c3.
double spectrum_bound(const SpectrumRegime& regime, double lambda, int n,
                      double C = 1.0);

void save_eigenvalues_csv(const GramSummary& summary, const std::string& path);

} // namespace rflaf
