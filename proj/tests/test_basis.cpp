#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rflaf/basis.hpp"
#include "rflaf/errors.hpp"

using namespace rflaf;

namespace {

// Brute-force Cox-de Boor recursion, independent of the de Boor triangle in
// the implementation. Valid strictly inside the knot range.
double cox_de_boor(const std::vector<double>& t, int i, int k, double z) {
  if (k == 1) return (z >= t[static_cast<size_t>(i)] &&
                      z < t[static_cast<size_t>(i + 1)])
                         ? 1.0
                         : 0.0;
  double acc = 0.0;
  const double dl = t[static_cast<size_t>(i + k - 1)] - t[static_cast<size_t>(i)];
  if (dl > 0.0)
    acc += (z - t[static_cast<size_t>(i)]) / dl * cox_de_boor(t, i, k - 1, z);
  const double dr = t[static_cast<size_t>(i + k)] - t[static_cast<size_t>(i + 1)];
  if (dr > 0.0)
    acc += (t[static_cast<size_t>(i + k)] - z) / dr * cox_de_boor(t, i + 1, k - 1, z);
  return acc;
}

// Same open-clamped knot rule the basis documents.
std::vector<double> clamped_knots(double lo, double hi, int n, int k) {
  std::vector<double> t(static_cast<size_t>(n + k));
  const int interior = n - k;
  for (int i = 0; i < k; ++i) t[static_cast<size_t>(i)] = lo;
  for (int i = 0; i < interior; ++i)
    t[static_cast<size_t>(k + i)] = lo + (hi - lo) * (i + 1) / (interior + 1.0);
  for (int i = 0; i < k; ++i) t[static_cast<size_t>(n + i)] = hi;
  return t;
}

} // namespace

TEST_CASE("make_grid spacing") {
  const Vector g3 = make_grid(-1.0, 1.0, 3);
  CHECK(g3.size() == 3);
  CHECK(g3[0] == doctest::Approx(-1.0));
  CHECK(g3[1] == doctest::Approx(0.0));
  CHECK(g3[2] == doctest::Approx(1.0));

  const Vector g1 = make_grid(0.0, 0.0, 1);
  CHECK(g1.size() == 1);
  CHECK(g1[0] == 0.0);

  const Vector g5 = make_grid(-2.0, 2.0, 5);
  for (int i = 0; i < 5; ++i) CHECK(g5[i] == doctest::Approx(-2.0 + i));

  CHECK_THROWS_AS(make_grid(0.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1.0, 0.0, 3), std::invalid_argument);
}

TEST_CASE("rbf basis values") {
  const BasisConfig cfg = BasisConfig::make(BasisKind::Rbf, -1.0, 1.0, 3, 1.0);
  const Vector b = eval_basis(cfg, 0.0);
  CHECK(b[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(1.0));
  CHECK(b[2] == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  // centered bump is exactly one
  for (int j = 0; j < 3; ++j) CHECK(eval_basis(cfg, cfg.centers[j])[j] == 1.0);

  for (int j = 0; j < 3; ++j) {
    CHECK(b[j] > 0.0);
    CHECK(b[j] <= 1.0);
  }
  CHECK_THROWS_AS(eval_basis(cfg, std::nan("")), std::invalid_argument);
}

TEST_CASE("rbf symmetry about a midpoint") {
  const BasisConfig cfg = BasisConfig::make(BasisKind::Rbf, -2.0, 3.0, 7, 0.6);
  const double m = 0.4;
  BasisConfig mirrored = cfg;
  mirrored.extent_lo = 2.0 * m - cfg.extent_hi;
  mirrored.extent_hi = 2.0 * m - cfg.extent_lo;
  mirrored.centers = (2.0 * m - cfg.centers.array()).reverse();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-2.0, 3.0);
  for (int trial = 0; trial < 25; ++trial) {
    const double z = unif(rng);
    const Vector b = eval_basis(cfg, z);
    const Vector br = eval_basis(mirrored, 2.0 * m - z);
    for (int i = 0; i < cfg.grid_size(); ++i)
      CHECK(b[i] == doctest::Approx(br[cfg.grid_size() - 1 - i]).epsilon(1e-12));
  }
}

TEST_CASE("bspline matches brute-force recursion and sums to one") {
  const int N = 7, order = 3;
  const BasisConfig cfg =
      BasisConfig::make(BasisKind::BSpline, -1.0, 2.0, N, 0.0, order);
  const auto knots = clamped_knots(-1.0, 2.0, N, order);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(-0.999, 1.999);
  for (int trial = 0; trial < 40; ++trial) {
    const double z = unif(rng);
    const Vector b = eval_basis(cfg, z);
    double sum = 0.0;
    for (int i = 0; i < N; ++i) {
      CHECK(b[i] == doctest::Approx(cox_de_boor(knots, i, order, z)).epsilon(1e-12));
      sum += b[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  // outside the extent the basis has compact support
  const Vector outside = eval_basis(cfg, -1.5);
  CHECK(outside.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("activation evaluation") {
  const BasisConfig cfg = BasisConfig::make(BasisKind::Rbf, 0.0, 1.0, 2, 1.0);

  ActivationCoeffs zero{Vector::Zero(2), 1.0};
  for (double z : {-1.0, 0.0, 0.3, 2.0}) CHECK(eval_activation(zero, cfg, z) == 0.0);

  ActivationCoeffs e1{Vector::Unit(2, 1), 1.0};
  CHECK(eval_activation(e1, cfg, cfg.centers[1]) == doctest::Approx(1.0));

  ActivationCoeffs ones{Vector::Ones(2), 2.0};
  CHECK(eval_activation(ones, cfg, 0.5) ==
        doctest::Approx(2.0 * std::exp(-0.125)).epsilon(1e-12));

  ActivationCoeffs bad{Vector::Ones(3), 1.0};
  CHECK_THROWS_AS(eval_activation(bad, cfg, 0.0), std::invalid_argument);
}

TEST_CASE("activation is linear in the coefficients") {
  const BasisConfig cfg = BasisConfig::make(BasisKind::Rbf, -2.0, 2.0, 6);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector a(6), b(6);
    for (int i = 0; i < 6; ++i) {
      a[i] = gauss(rng);
      b[i] = gauss(rng);
    }
    const double alpha = gauss(rng), beta = gauss(rng), z = gauss(rng);
    const double lhs =
        eval_activation({alpha * a + beta * b, 0.0}, cfg, z);
    const double rhs = alpha * eval_activation({a, 0.0}, cfg, z) +
                       beta * eval_activation({b, 0.0}, cfg, z);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("fit_activation recovers representable targets") {
  const BasisConfig cfg = BasisConfig::make(BasisKind::Rbf, -1.0, 1.0, 5);
  const int j = 2;

  std::vector<std::pair<double, double>> zeros, bump;
  const Vector grid = make_grid(-1.0, 1.0, 41);
  for (int g = 0; g < grid.size(); ++g) {
    zeros.emplace_back(grid[g], 0.0);
    // independent direct RBF evaluation as the target
    const double u = grid[g] - cfg.centers[j];
    bump.emplace_back(grid[g], std::exp(-u * u / (2.0 * cfg.width * cfg.width)));
  }

  const ActivationFit zfit = fit_activation(zeros, cfg, 0.0);
  CHECK(zfit.coeffs.a.cwiseAbs().maxCoeff() <= 1e-12);

  const ActivationFit bfit = fit_activation(bump, cfg, 0.0);
  for (int i = 0; i < 5; ++i)
    CHECK(bfit.coeffs.a[i] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));

  // independent least-squares oracle: QR on the design assembled from the
  // direct Gaussian formula
  Matrix A(grid.size(), 5);
  Vector target(grid.size());
  for (int g = 0; g < grid.size(); ++g) {
    for (int i = 0; i < 5; ++i) {
      const double u = grid[g] - cfg.centers[i];
      A(g, i) = std::exp(-u * u / (2.0 * cfg.width * cfg.width));
    }
    target[g] = bump[static_cast<size_t>(g)].second;
  }
  const Vector oracle = A.colPivHouseholderQr().solve(target);
  for (int i = 0; i < 5; ++i)
    CHECK(bfit.coeffs.a[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
}

TEST_CASE("fit_activation error paths") {
  const BasisConfig cfg = BasisConfig::make(BasisKind::Rbf, -1.0, 1.0, 8);
  std::vector<std::pair<double, double>> few = {{-0.5, 1.0}, {0.5, 1.0}};
  CHECK_THROWS_AS(fit_activation(few, cfg, 0.0), IllPosedError);
  CHECK_NOTHROW(fit_activation(few, cfg, 1e-8));
}

TEST_CASE("cos fit error shrinks with the grid") {
  const Vector grid = make_grid(-3.0, 3.0, 1001);
  std::vector<std::pair<double, double>> samples;
  for (int g = 0; g < grid.size(); ++g)
    samples.emplace_back(grid[g], std::cos(grid[g]));

  std::vector<double> sup;
  for (const int N : {8, 16, 32}) {
    const BasisConfig cfg = BasisConfig::make(BasisKind::Rbf, -3.75, 3.75, N);
    const ActivationFit fit = fit_activation(samples, cfg, 1e-10);
    double err = 0.0;
    for (int g = 0; g < grid.size(); ++g)
      err = std::max(err, std::abs(eval_activation(fit.coeffs, cfg, grid[g]) -
                                   std::cos(grid[g])));
    sup.push_back(err);
  }
  CHECK(sup[2] < sup[0]); // N = 32 beats N = 8
  for (size_t i = 1; i < sup.size(); ++i) CHECK(sup[i] < sup[i - 1]);
}

TEST_CASE("fit error is non-increasing in N for a compactly supported target") {
  // target vanishing at the extent boundary, width tied to the spacing
  const Vector grid = make_grid(-6.0, 6.0, 1001);
  std::vector<std::pair<double, double>> samples;
  for (int g = 0; g < grid.size(); ++g)
    samples.emplace_back(grid[g], std::exp(-0.5 * grid[g] * grid[g]));

  std::vector<double> sup;
  for (const int N : {8, 16, 32, 64}) {
    const BasisConfig cfg = BasisConfig::make(BasisKind::Rbf, -6.0, 6.0, N);
    const ActivationFit fit = fit_activation(samples, cfg, 1e-10);
    double err = 0.0;
    for (int g = 0; g < grid.size(); ++g)
      err = std::max(err, std::abs(eval_activation(fit.coeffs, cfg, grid[g]) -
                                   std::exp(-0.5 * grid[g] * grid[g])));
    sup.push_back(err);
  }
  for (size_t i = 1; i < sup.size(); ++i) CHECK(sup[i] <= sup[i - 1]);
}

TEST_CASE("config text round trip") {
  const BasisConfig cfg =
      BasisConfig::make(BasisKind::BSpline, -2.5, 4.0, 12, 0.8, 4);
  const BasisConfig back = BasisConfig::from_config(cfg.to_config());
  CHECK(back.kind == cfg.kind);
  CHECK(back.order == cfg.order);
  CHECK(back.grid_size() == cfg.grid_size());
  CHECK(back.width == doctest::Approx(cfg.width).epsilon(1e-15));
  CHECK(back.extent_lo == doctest::Approx(cfg.extent_lo).epsilon(1e-15));
  CHECK(back.extent_hi == doctest::Approx(cfg.extent_hi).epsilon(1e-15));
  CHECK_THROWS_AS(BasisConfig::from_config("kind banana"), ConfigError);
}

TEST_CASE("basis config invariants") {
  CHECK_THROWS_AS(BasisConfig::make(BasisKind::Rbf, 1.0, -1.0, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(BasisConfig::make(BasisKind::Rbf, -1.0, 1.0, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(BasisConfig::make(BasisKind::Rbf, -1.0, 1.0, 3, -0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(BasisConfig::make(BasisKind::BSpline, -1.0, 1.0, 2, 0.0, 3),
                  std::invalid_argument);

  // evenly spaced construction has equal gaps to 1e-12 relative
  const BasisConfig cfg = BasisConfig::make(BasisKind::Rbf, -5.0, 7.0, 33);
  const double gap0 = cfg.centers[1] - cfg.centers[0];
  for (int i = 2; i < cfg.grid_size(); ++i)
    CHECK(cfg.centers[i] - cfg.centers[i - 1] ==
          doctest::Approx(gap0).epsilon(1e-12));
}
