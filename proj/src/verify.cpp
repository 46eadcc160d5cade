#include "rflaf/verify.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "rflaf/features.hpp"
#include "rflaf/kernel.hpp"
#include "rflaf/rng.hpp"
#include "rflaf/solvers.hpp"

namespace rflaf {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> unif(std::log(lo), std::log(hi));
  return std::exp(unif(rng));
}

Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = gauss(rng);
  return m;
}

} // namespace

CheckResult verify_woodbury(int instances, double tolerance) {
  CheckResult result;
  result.suite = "woodbury";
  auto rng = make_rng(20240401);
  std::uniform_int_distribution<int> dim(2, 64);
  double worst = 0.0;
  int failures = 0;
  for (int k = 0; k < instances; ++k) {
    const Index n = dim(rng), s = dim(rng);
    const Matrix Z = random_matrix(rng, n, s);
    const Vector y = random_matrix(rng, n, 1);
    const double lambda = log_uniform(rng, 1e-4, 1.0);
    const Matrix vp = ridge_solve({Z, y, lambda});
    const Matrix vd = ridge_solve_dual({Z, y, lambda});
    const double rel = (vp - vd).norm() / std::max(vp.norm(), 1e-300);
    worst = std::max(worst, rel);
    if (!(rel <= tolerance)) ++failures;
  }
  result.measured["instances"] = instances;
  result.measured["worst_relative_diff"] = worst;
  result.passed = failures == 0;
  result.details.push_back("primal/dual agreement on " + std::to_string(instances) +
                           " instances, worst relative diff " + fmt(worst) +
                           " (tolerance " + fmt(tolerance) + ")");
  return result;
}

CheckResult verify_effdim() {
  CheckResult result;
  result.suite = "effdim";
  result.passed = true;
  auto rng = make_rng(20240402);

  // Eigenvalue-sum path vs the inverse-trace path on random PSD matrices.
  double worst_gap = 0.0;
  const int psd_instances = 20;
  for (int k = 0; k < psd_instances; ++k) {
    const Index n = 30;
    const Matrix A = random_matrix(rng, n, n);
    const Matrix gram = A * A.transpose();
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    const double lambda = unif(rng);
    const double d_eig = gram_summary(gram, static_cast<int>(n), lambda).d_eff;
    Matrix shifted = gram;
    shifted.diagonal().array() += static_cast<double>(n) * lambda;
    const double d_trace = shifted.ldlt().solve(gram).trace();
    worst_gap = std::max(worst_gap, std::abs(d_eig - d_trace));
  }
  result.measured["worst_path_gap"] = worst_gap;
  const bool paths_ok = worst_gap <= 1e-10;
  result.passed = result.passed && paths_ok;
  result.details.push_back(std::string(paths_ok ? "ok" : "FAIL") +
                           ": eigenvalue vs trace paths on " +
                           std::to_string(psd_instances) +
                           " PSD matrices, worst gap " + fmt(worst_gap));

  // log-log slope of d_eff vs 1/lambda on planted polynomial spectra.
  const std::vector<double> lambdas = {1e-1, 1e-2, 1e-3, 1e-4};
  for (const double t : {1.5, 2.0}) {
    const Vector profile = SpectrumRegime::polynomial(t).profile(4096);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const double lambda : lambdas) {
      const double x = std::log(1.0 / lambda);
      const double y = std::log(effective_dimension(profile, lambda));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double m = static_cast<double>(lambdas.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const bool ok = std::abs(slope - 1.0 / t) <= 0.15;
    result.passed = result.passed && ok;
    result.measured["slope_t" + fmt(t)] = slope;
    result.details.push_back(std::string(ok ? "ok" : "FAIL") + ": planted t = " +
                             fmt(t) + ", fitted slope " + fmt(slope) +
                             " vs 1/t = " + fmt(1.0 / t) + " (tolerance 0.15)");
  }
  return result;
}

CheckResult verify_lemma22() {
  CheckResult result;
  result.suite = "lemma22";
  Lemma22Config cfg;
  cfg.seed = 20240403;
  const Lemma22Result r = lemma22_check(cfg);
  result.measured["success_rate"] = r.success_rate;
  result.measured["threshold_s"] = r.threshold_s;
  result.measured["d_eff"] = r.d_eff;
  result.passed = r.success_rate >= 0.9;
  result.details.push_back(
      std::string(result.passed ? "ok" : "FAIL") + ": inner objective <= 2 lambda in " +
      fmt(100.0 * r.success_rate) + "% of " + std::to_string(cfg.trials) +
      " trials at s = " + std::to_string(r.threshold_s) +
      " (d_eff " + fmt(r.d_eff) + ", lambda " + fmt(cfg.lambda) + ")");
  return result;
}

CheckResult verify_leverage_bound(int configs) {
  CheckResult result;
  result.suite = "leverage_bound";
  auto rng = make_rng(20240404);
  std::uniform_int_distribution<int> dims(2, 6), rows(10, 60), pools(5, 40);
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < configs; ++k) {
    const int d = dims(rng), n = rows(rng), s = pools(rng);
    const double lambda = log_uniform(rng, 1e-3, 1.0);
    const FeaturePool pool = sample_pool(d, s, mix_seed(20240404, k));
    const Matrix X = random_matrix(rng, n, d);
    const BasisConfig basis = BasisConfig::make(BasisKind::Rbf, -4.0, 4.0, 8);
    Vector a = random_matrix(rng, 8, 1);
    a.normalize();
    const Matrix Z =
        feature_matrix(X, pool.W, Vector(), ActivationCoeffs{a, 1.0}, basis).Z;
    const LeverageWeights lw = leverage_weights(Z, lambda, n);
    for (Index i = 0; i < Z.cols(); ++i) {
      const double bound = Z.col(i).squaredNorm() / (n * lambda);
      worst_margin = std::min(worst_margin, bound - lw.raw[i]);
      if (lw.raw[i] > bound) ++violations;
    }
  }
  result.measured["violations"] = violations;
  result.measured["smallest_margin"] = worst_margin;
  result.passed = violations == 0;
  result.details.push_back(std::string(result.passed ? "ok" : "FAIL") + ": " +
                           std::to_string(violations) + " violations over " +
                           std::to_string(configs) +
                           " configs, smallest slack " + fmt(worst_margin));
  return result;
}

CheckResult verify_gradcheck(int points, double tolerance) {
  CheckResult result;
  result.suite = "gradcheck";
  auto rng = make_rng(20240405);
  const int n = 8, s = 3, N = 4;
  const Matrix X = random_matrix(rng, n, 2);
  const Vector y = random_matrix(rng, n, 1);
  const Matrix W = random_matrix(rng, 2, s);
  const BasisConfig basis = BasisConfig::make(BasisKind::Rbf, -3.0, 3.0, N);
  Vector qd(s);
  for (int j = 0; j < s; ++j) qd[j] = 0.5 + j * 0.25;
  const JointProblem prob(X, y, W, qd, basis);

  const double lambda = 0.05, lambda0 = 0.3, h = 1e-5;
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    const Vector a = random_matrix(rng, N, 1);
    const Vector v = random_matrix(rng, s, 1);
    for (const auto obj : {JointObjective::MainEq5, JointObjective::SensingEq8}) {
      const auto e = prob.eval(obj, LossKind::Mse, a, v, lambda, lambda0);
      Vector fd_a(N), fd_v(s);
      for (int k = 0; k < N; ++k) {
        Vector ap = a, am = a;
        ap[k] += h;
        am[k] -= h;
        fd_a[k] = (prob.eval(obj, LossKind::Mse, ap, v, lambda, lambda0).objective -
                   prob.eval(obj, LossKind::Mse, am, v, lambda, lambda0).objective) /
                  (2 * h);
      }
      for (int j = 0; j < s; ++j) {
        Vector vp = v, vm = v;
        vp[j] += h;
        vm[j] -= h;
        fd_v[j] = (prob.eval(obj, LossKind::Mse, a, vp, lambda, lambda0).objective -
                   prob.eval(obj, LossKind::Mse, a, vm, lambda, lambda0).objective) /
                  (2 * h);
      }
      const double num = std::sqrt((e.grad_a - fd_a).squaredNorm() +
                                   (e.grad_v - fd_v).squaredNorm());
      const double den = std::max(
          std::sqrt(fd_a.squaredNorm() + fd_v.squaredNorm()), 1e-12);
      worst = std::max(worst, num / den);
    }
  }
  result.measured["worst_relative_error"] = worst;
  result.passed = worst <= tolerance;
  result.details.push_back(std::string(result.passed ? "ok" : "FAIL") +
                           ": analytic vs central-difference gradients at " +
                           std::to_string(points) + " points, worst relative error " +
                           fmt(worst) + " (tolerance " + fmt(tolerance) + ")");
  return result;
}

CheckResult verify_unbiasedness(int resamples, double tolerance) {
  CheckResult result;
  result.suite = "unbiasedness";
  auto rng = make_rng(20240406);
  const int n = 50, s = 100, d = 4, N = 8;
  const FeaturePool pool = sample_pool(d, s, 51);
  const Matrix X = random_matrix(rng, n, d);
  const BasisConfig basis = resolve_basis(BasisSpec{BasisKind::Rbf, 3, N, 0, 0, 0},
                                          X * pool.W);
  Vector a = random_matrix(rng, N, 1);
  a.normalize();
  const Matrix Z =
      feature_matrix(X, pool.W, Vector(), ActivationCoeffs{a, 1.0}, basis).Z;
  const Matrix pool_gram = gram_empirical(Z, s);
  const LeverageWeights lw =
      leverage_weights(Z, 1.0 / std::sqrt(double(n)), n);

  Matrix mean_gram = Matrix::Zero(n, n);
  for (int r = 0; r < resamples; ++r) {
    const WeightedFeatures wf = resample_weighted(
        pool, lw, s, mix_seed(777, static_cast<std::uint64_t>(r)), QMode::Section24);
    Matrix Zq(n, s);
    for (int m = 0; m < s; ++m)
      Zq.col(m) = Z.col(wf.source_indices[static_cast<size_t>(m)]) * wf.q_diag[m];
    mean_gram.noalias() += gram_empirical(Zq, s) / static_cast<double>(resamples);
  }
  const double rel = (mean_gram - pool_gram).norm() / pool_gram.norm();
  result.measured["frobenius_relative_error"] = rel;
  result.passed = rel <= tolerance;
  result.details.push_back(std::string(result.passed ? "ok" : "FAIL") + ": " +
                           std::to_string(resamples) +
                           " resamples, Frobenius relative error " + fmt(rel) +
                           " (tolerance " + fmt(tolerance) + ")");
  return result;
}

CheckResult verify_degeneracy() {
  CheckResult result;
  result.suite = "degeneracy";
  const SyntheticTruth truth = make_truth(TargetActivation::Sin, 5, 4, 0.01, 21);
  const Dataset all = synth_target(truth, 400, 22);
  auto [train, test] = standardize_split(all, 0.2, 23);
  const Split data{std::move(train), std::move(test)};

  PipelineConfig cfg;
  cfg.s = 60;
  cfg.S = 60;
  cfg.seed = 3;
  cfg.sgd.epochs = 8;
  cfg.sgd.batch_size = 64;
  cfg.basis.n_grid = 8;

  PipelineConfig hooked = cfg;
  hooked.hook_uniform_q = true;
  hooked.hook_fixed_a = Vector::Zero(cfg.basis.n_grid);
  hooked.warm_start_final = false;

  const auto [lws_model, lws_report] = run_algorithm1(data, hooked);
  const auto [ps_model, ps_report] = run_plain(data, cfg);
  const double train_gap = std::abs(lws_report.train_loss - ps_report.train_loss);
  const double test_gap = std::abs(lws_report.test_loss - ps_report.test_loss);
  result.measured["train_gap"] = train_gap;
  result.measured["test_gap"] = test_gap;
  result.passed = train_gap <= 1e-10 && test_gap <= 1e-10;
  result.details.push_back(std::string(result.passed ? "ok" : "FAIL") +
                           ": uniform-q pipeline vs plain pipeline, loss gaps " +
                           fmt(train_gap) + " / " + fmt(test_gap) +
                           " (tolerance 1e-10)");
  return result;
}

CheckResult verify_lemma21_trend() {
  CheckResult result;
  result.suite = "lemma21_trend";
  result.passed = true;
  const Vector grid = make_grid(-3.0, 3.0, 1001);
  std::vector<double> errors;
  for (const int N : {8, 16, 32}) {
    // extent wider than the evaluation window: the grid cannot match a
    // non-vanishing value at its own boundary
    const BasisConfig basis = BasisConfig::make(BasisKind::Rbf, -3.75, 3.75, N);
    std::vector<std::pair<double, double>> samples;
    for (Index g = 0; g < grid.size(); ++g)
      samples.emplace_back(grid[g], std::cos(grid[g]));
    const ActivationFit fit = fit_activation(samples, basis, 1e-10);
    double sup = 0.0;
    for (Index g = 0; g < grid.size(); ++g)
      sup = std::max(sup, std::abs(eval_activation(fit.coeffs, basis, grid[g]) -
                                   std::cos(grid[g])));
    errors.push_back(sup);
    result.measured["sup_error_N" + std::to_string(N)] = sup;
  }
  for (size_t i = 1; i < errors.size(); ++i)
    if (!(errors[i] < errors[i - 1])) result.passed = false;
  result.details.push_back(std::string(result.passed ? "ok" : "FAIL") +
                           ": cos fit sup errors over N in {8,16,32}: " +
                           fmt(errors[0]) + " > " + fmt(errors[1]) + " > " +
                           fmt(errors[2]) + " (strict decrease)");
  return result;
}

Split make_exponential_task() {
  // Anisotropic inputs give the activation Gram a fast-decaying spectrum:
  // coordinate j carries standard deviation 0.55^j, so only a few directions
  // matter and leverage scores become informative.
  const int d = 10, n_train = 2000, n_test = 500;
  const SyntheticTruth truth = make_truth(TargetActivation::Sin, d, 6, 0.01, 7);

  auto rng = make_rng(mix_seed(11, 3));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector scales(d);
  for (int j = 0; j < d; ++j) scales[j] = std::pow(0.55, j);

  const auto draw = [&](int rows) {
    Matrix X(rows, d);
    for (Index i = 0; i < rows; ++i)
      for (int j = 0; j < d; ++j) X(i, j) = scales[j] * gauss(rng);
    return X;
  };
  const auto label = [&](const Matrix& X) {
    Vector y = truth.f_star(X);
    const double sigma = std::sqrt(truth.noise_var);
    for (Index i = 0; i < y.size(); ++i)
      y[i] = std::clamp(y[i] + sigma * gauss(rng), -truth.clip_y0, truth.clip_y0);
    return y;
  };

  Split data;
  data.train.X = draw(n_train);
  data.train.y = label(data.train.X);
  data.test.X = draw(n_test);
  data.test.y = label(data.test.X);
  return data;
}

LwsPsStudy run_lws_ps_study(const Split& data, int seeds, int workers) {
  LwsPsStudy study;
  SweepSpec spec;
  spec.schemes = {"lws", "ps"};
  spec.S_list = {30, 50, 100, 200, 300};
  spec.pool_sizes = {500};
  spec.seeds = seeds;
  spec.base.basis.n_grid = 16;
  spec.base.lambda0 = 1e-3;
  // 1/sqrt(n) would sit at the top Gram eigenvalue here and flatten both
  // schemes onto Var(y); the study needs lambda well inside Assumption 2.2.
  spec.base.lambda = 1e-3;
  spec.base.lambda_star = 1e-3;
  spec.base.sgd.learning_rate = 1e-3;
  spec.base.sgd.epochs = 50;
  spec.base.sgd.batch_size = 128;
  study.sweep = run_sweep(spec, data, workers);
  return study;
}

CheckResult verify_lws_vs_ps(const LwsPsStudy& study) {
  CheckResult result;
  result.suite = "lws_vs_ps";
  result.passed = true;
  for (const int S : study.lws_S) {
    const double lws = study.sweep.mean_test_loss("lws", S);
    const double ps = study.sweep.mean_test_loss("ps", S);
    const bool ok = lws <= 1.05 * ps;
    result.passed = result.passed && ok;
    result.measured["lws_S" + std::to_string(S)] = lws;
    result.measured["ps_S" + std::to_string(S)] = ps;
    result.details.push_back(std::string(ok ? "ok" : "FAIL") + ": S = " +
                             std::to_string(S) + ", mean test loss LWS " +
                             fmt(lws) + " vs 1.05 x PS " + fmt(1.05 * ps));
  }
  const double lws50 = study.sweep.mean_test_loss("lws", 50);
  const double ps200 = study.sweep.mean_test_loss("ps", 200);
  const bool cross_ok = lws50 <= ps200;
  result.passed = result.passed && cross_ok;
  result.measured["lws_S50"] = lws50;
  result.measured["ps_S200"] = ps200;
  result.details.push_back(std::string(cross_ok ? "ok" : "FAIL") +
                           ": LWS(50) " + fmt(lws50) + " <= PS(200) " + fmt(ps200));
  return result;
}

CheckResult verify_monotone_width(const LwsPsStudy& study) {
  CheckResult result;
  result.suite = "monotone_width";
  result.passed = true;
  const std::vector<int> S_list = {30, 50, 100, 300};
  for (size_t i = 1; i < S_list.size(); ++i) {
    const double prev = study.sweep.mean_test_loss("ps", S_list[i - 1]);
    const double curr = study.sweep.mean_test_loss("ps", S_list[i]);
    const bool ok = curr <= 1.05 * prev;
    result.passed = result.passed && ok;
    result.details.push_back(std::string(ok ? "ok" : "FAIL") + ": PS(" +
                             std::to_string(S_list[i]) + ") " + fmt(curr) +
                             " <= 1.05 x PS(" + std::to_string(S_list[i - 1]) +
                             ") " + fmt(1.05 * prev));
  }
  for (const int S : S_list)
    result.measured["ps_S" + std::to_string(S)] =
        study.sweep.mean_test_loss("ps", S);
  return result;
}

} // namespace rflaf
