#include "rflaf/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rflaf/errors.hpp"

namespace rflaf {

void BasisConfig::validate() const {
  const int n = grid_size();
  if (n < 1) throw std::invalid_argument("basis: grid must have N >= 1 centers");
  if (!(width > 0.0)) throw std::invalid_argument("basis: width must be positive");
  if (!(extent_lo <= extent_hi))
    throw std::invalid_argument("basis: extent_lo must not exceed extent_hi");
  if (kind == BasisKind::BSpline) {
    if (order < 1) throw std::invalid_argument("basis: B-spline order must be >= 1");
    if (n < order) throw std::invalid_argument("basis: B-spline needs N >= order");
  }
  for (int i = 0; i < n; ++i) {
    const double c = centers[i];
    if (!std::isfinite(c)) throw std::invalid_argument("basis: non-finite center");
    if (c < extent_lo || c > extent_hi)
      throw std::invalid_argument("basis: center outside extent");
    if (i > 0 && !(centers[i - 1] < c))
      throw std::invalid_argument("basis: centers must be strictly increasing");
  }
}

BasisConfig BasisConfig::make(BasisKind kind, double lo, double hi, int n_grid,
                              double width, int order) {
  if (width < 0.0)
    throw std::invalid_argument("basis: width must be positive (0 for the default)");
  BasisConfig cfg;
  cfg.kind = kind;
  cfg.order = order;
  cfg.centers = make_grid(lo, hi, n_grid);
  cfg.extent_lo = lo;
  cfg.extent_hi = hi;
  if (width > 0.0)
    cfg.width = width;
  else if (n_grid >= 2)
    cfg.width = (hi - lo) / static_cast<double>(n_grid - 1);
  else
    cfg.width = std::max(hi - lo, 1.0);
  cfg.validate();
  return cfg;
}

double default_radius(const BasisConfig& cfg) {
  return 1.0 / (cfg.width * std::sqrt(static_cast<double>(cfg.grid_size())));
}

Vector make_grid(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("make_grid: N must be >= 1");
  if (!(lo <= hi)) throw std::invalid_argument("make_grid: lo must not exceed hi");
  Vector g(n);
  if (n == 1) {
    g[0] = 0.5 * (lo + hi);
    return g;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) g[i] = lo + step * i;
  g[n - 1] = hi;
  return g;
}

namespace {

// Uniform open-clamped knot vector: order copies of each extent endpoint,
// interior knots evenly spaced. Length N + order.
std::vector<double> clamped_knots(const BasisConfig& cfg) {
  const int n = cfg.grid_size();
  const int k = cfg.order;
  std::vector<double> t(static_cast<size_t>(n + k));
  const int interior = n - k; // number of interior knots
  for (int i = 0; i < k; ++i) t[i] = cfg.extent_lo;
  for (int i = 0; i < interior; ++i)
    t[k + i] = cfg.extent_lo +
               (cfg.extent_hi - cfg.extent_lo) * (i + 1) / (interior + 1.0);
  for (int i = 0; i < k; ++i) t[n + i] = cfg.extent_hi;
  return t;
}

void eval_bspline_into(const BasisConfig& cfg, double z, double* out) {
  const int n = cfg.grid_size();
  const int k = cfg.order;
  std::fill(out, out + n, 0.0);
  const std::vector<double> t = clamped_knots(cfg);
  if (z < cfg.extent_lo || z > cfg.extent_hi) return; // compact support

  // Knot span [t_mu, t_mu+1) containing z, clamped to the last nonempty span.
  int mu = k - 1;
  while (mu < n - 1 && z >= t[mu + 1]) ++mu;

  // de Boor / Cox triangular scheme over the k active functions.
  std::vector<double> b(static_cast<size_t>(k), 0.0);
  b[0] = 1.0;
  for (int deg = 1; deg < k; ++deg) {
    double saved = 0.0;
    for (int j = 0; j < deg; ++j) {
      const int idx = mu - deg + 1 + j;
      const double denom = t[idx + deg] - t[idx];
      const double alpha = denom > 0.0 ? (z - t[idx]) / denom : 0.0;
      const double tmp = b[j];
      b[j] = saved + (1.0 - alpha) * tmp;
      saved = alpha * tmp;
    }
    b[deg] = saved;
  }
  for (int j = 0; j < k; ++j) {
    const int idx = mu - k + 1 + j;
    if (idx >= 0 && idx < n) out[idx] = b[j];
  }
}

} // namespace

void eval_basis_into(const BasisConfig& cfg, double z, double* out) {
  const int n = cfg.grid_size();
  if (cfg.kind == BasisKind::Rbf) {
    const double inv2h2 = 1.0 / (2.0 * cfg.width * cfg.width);
    for (int i = 0; i < n; ++i) {
      const double u = z - cfg.centers[i];
      out[i] = std::exp(-u * u * inv2h2);
    }
  } else {
    eval_bspline_into(cfg, z, out);
  }
}

Vector eval_basis(const BasisConfig& cfg, double z) {
  cfg.validate();
  if (!std::isfinite(z)) throw std::invalid_argument("eval_basis: non-finite input");
  Vector out(cfg.grid_size());
  eval_basis_into(cfg, z, out.data());
  return out;
}

double eval_activation(const ActivationCoeffs& coeffs, const BasisConfig& cfg,
                       double z) {
  if (coeffs.a.size() != cfg.grid_size())
    throw std::invalid_argument("eval_activation: coefficient/grid length mismatch");
  return eval_basis(cfg, z).dot(coeffs.a);
}

ActivationFit fit_activation(const std::vector<std::pair<double, double>>& samples,
                             const BasisConfig& cfg, double ridge) {
  cfg.validate();
  if (ridge < 0.0) throw std::invalid_argument("fit_activation: ridge must be >= 0");
  const int n = cfg.grid_size();
  const int m = static_cast<int>(samples.size());
  if (ridge == 0.0 && m < n)
    throw IllPosedError("fit_activation: fewer samples than coefficients with ridge = 0");

  Matrix A(m, n);
  Vector target(m);
  Vector row(n);
  for (int i = 0; i < m; ++i) {
    if (!std::isfinite(samples[i].first))
      throw std::invalid_argument("fit_activation: non-finite sample point");
    eval_basis_into(cfg, samples[i].first, row.data());
    A.row(i) = row.transpose();
    target[i] = samples[i].second;
  }

  Matrix gram = A.transpose() * A;
  gram.diagonal().array() += ridge;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("fit_activation: normal-equation factorization failed");
  if (ridge == 0.0) {
    const double dmax = ldlt.vectorD().maxCoeff();
    if (!(ldlt.vectorD().minCoeff() > 1e-12 * std::max(dmax, 1.0)))
      throw IllPosedError("fit_activation: rank-deficient design with ridge = 0");
  }
  Vector a = ldlt.solve(A.transpose() * target);

  ActivationFit fit;
  fit.coeffs.a = a;
  fit.coeffs.norm_bound = std::max(a.norm(), default_radius(cfg));

  // Sup-norm residual on a dense held-out grid. Interpolate the target
  // linearly between the provided samples (sorted copy).
  std::vector<std::pair<double, double>> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const Vector grid = make_grid(cfg.extent_lo, cfg.extent_hi, 1001);
  Vector b(n);
  double sup = 0.0;
  for (int g = 0; g < grid.size(); ++g) {
    const double z = grid[g];
    auto it = std::lower_bound(sorted.begin(), sorted.end(),
                               std::make_pair(z, -std::numeric_limits<double>::infinity()));
    double t;
    if (it == sorted.begin())
      t = it->second;
    else if (it == sorted.end())
      t = std::prev(it)->second;
    else {
      const auto [z1, t1] = *std::prev(it);
      const auto [z2, t2] = *it;
      t = z2 > z1 ? t1 + (t2 - t1) * (z - z1) / (z2 - z1) : t1;
    }
    eval_basis_into(cfg, z, b.data());
    sup = std::max(sup, std::abs(b.dot(a) - t));
  }
  fit.sup_error = sup;
  return fit;
}

std::string BasisConfig::to_config() const {
  std::ostringstream os;
  os.precision(17);
  os << "kind " << (kind == BasisKind::Rbf ? "rbf" : "bspline") << "\n"
     << "order " << order << "\n"
     << "n_grid " << grid_size() << "\n"
     << "width " << width << "\n"
     << "extent_lo " << extent_lo << "\n"
     << "extent_hi " << extent_hi << "\n";
  return os.str();
}

BasisConfig BasisConfig::from_config(const std::string& text) {
  std::istringstream is(text);
  std::string key;
  std::string kind_s = "rbf";
  int order = 3, n_grid = 0;
  double width = 0.0, lo = 0.0, hi = 0.0;
  while (is >> key) {
    if (key == "kind")
      is >> kind_s;
    else if (key == "order")
      is >> order;
    else if (key == "n_grid")
      is >> n_grid;
    else if (key == "width")
      is >> width;
    else if (key == "extent_lo")
      is >> lo;
    else if (key == "extent_hi")
      is >> hi;
    else
      throw ConfigError("basis config: unknown key '" + key + "'");
  }
  if (kind_s != "rbf" && kind_s != "bspline")
    throw ConfigError("basis config: unknown kind '" + kind_s + "'");
  return make(kind_s == "rbf" ? BasisKind::Rbf : BasisKind::BSpline, lo, hi,
              n_grid, width, order);
}

} // namespace rflaf
