#pragma once

#include <string>
#include <vector>

#include "rflaf/types.hpp"

namespace rflaf {

enum class BasisKind { Rbf, BSpline };

/// Grid of bump functions on a compact interval. For Rbf each center c_i
/// carries a Gaussian exp(-(z-c_i)^2 / (2h^2)); for BSpline the grid induces
/// a uniform open-clamped knot vector and `order` is the spline order
/// (degree + 1).
struct BasisConfig {
  BasisKind kind = BasisKind::Rbf;
  int order = 3;
  Vector centers;
  double width = 1.0;
  double extent_lo = -1.0;
  double extent_hi = 1.0;

  int grid_size() const { return static_cast<int>(centers.size()); }

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;

  /// Evenly spaced grid over [lo, hi] with width (hi-lo)/(n-1) unless
  /// `width` > 0 overrides it.
  static BasisConfig make(BasisKind kind, double lo, double hi, int n_grid,
                          double width = 0.0, int order = 3);

  std::string to_config() const;
  static BasisConfig from_config(const std::string& text);
};

/// Coefficients of the learnable activation sigma_a(z) = sum_i a_i B_i(z).
struct ActivationCoeffs {
  Vector a;
  double norm_bound = 0.0;
};

/// Default hypothesis-class radius 1/(h sqrt(N)).
double default_radius(const BasisConfig& cfg);

/// N evenly spaced points including both endpoints (the midpoint when n = 1).
Vector make_grid(double lo, double hi, int n);

/// All N basis values at z.
Vector eval_basis(const BasisConfig& cfg, double z);

/// Fills out[0..N) with the basis values at z. Hot path; cfg assumed valid,
/// z assumed finite.
void eval_basis_into(const BasisConfig& cfg, double z, double* out);

/// sigma_a(z) = sum_i a_i B_i(z).
double eval_activation(const ActivationCoeffs& coeffs, const BasisConfig& cfg,
                       double z);

struct ActivationFit {
  ActivationCoeffs coeffs;
  double sup_error = 0.0; // residual sup-norm on a held-out 1001-point grid
};

/// Regularized least squares of sigma_a against (z, target) samples:
/// min_a sum (sigma_a(z_k) - t_k)^2 + ridge * |a|^2.
/// ridge = 0 requires at least N independent samples, else IllPosedError.
ActivationFit fit_activation(const std::vector<std::pair<double, double>>& samples,
                             const BasisConfig& cfg, double ridge = 1e-10);

} // namespace rflaf
