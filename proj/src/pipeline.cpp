#include "rflaf/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "rflaf/errors.hpp"
#include "rflaf/kernel.hpp"
#include "rflaf/rng.hpp"

namespace rflaf {

namespace {

// Stage seeds; constant tags so that skipping a stage leaves the others'
// streams untouched.
constexpr std::uint64_t kPoolStream = 1;
constexpr std::uint64_t kSensingStream = 2;
constexpr std::uint64_t kResampleStream = 3;
constexpr std::uint64_t kFinalStream = 4;

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}
  template <typename F>
  auto time(const std::string& stage, F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      push(stage, t0);
    } else {
      auto out = fn();
      push(stage, t0);
      return out;
    }
  }

 private:
  void push(const std::string& stage, std::chrono::steady_clock::time_point t0) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    sink_.push_back({stage, dt.count()});
  }
  std::vector<StageTiming>& sink_;
};

void fill_q_stats(ExperimentReport& report, const Vector& q) {
  report.q_min = q.minCoeff();
  report.q_max = q.maxCoeff();
  double entropy = 0.0;
  for (Index i = 0; i < q.size(); ++i)
    if (q[i] > 0.0) entropy -= q[i] * std::log(q[i]);
  report.q_entropy = entropy;
}

double resolved_lambda(double value, Index n) {
  return value > 0.0 ? value : 1.0 / std::sqrt(static_cast<double>(n));
}

} // namespace

BasisConfig resolve_basis(const BasisSpec& spec, const Matrix& projections) {
  double lo = spec.extent_lo, hi = spec.extent_hi;
  if (!(lo < hi)) {
    const double mean = projections.mean();
    const double var =
        (projections.array() - mean).square().sum() /
        std::max<Index>(1, projections.size());
    double T = 3.0 * std::sqrt(var);
    if (!(T > 0.0)) T = 1.0;
    lo = -T;
    hi = T;
  }
  return BasisConfig::make(spec.kind, lo, hi, spec.n_grid, spec.width, spec.order);
}

void PipelineConfig::validate() const {
  if (s < 1) throw std::invalid_argument("pipeline: pool size must be >= 1");
  if (S < 1) throw std::invalid_argument("pipeline: S must be >= 1");
  if (lambda0 < 0.0) throw std::invalid_argument("pipeline: lambda0 must be >= 0");
  if (S > s)
    std::cerr << "pipeline: warning: S = " << S << " exceeds pool size s = " << s
              << "\n";
}

std::pair<RflafModel, ExperimentReport> run_algorithm1(const Split& data,
                                                       const PipelineConfig& cfg) {
  cfg.validate();
  const Matrix& X = data.train.X;
  const Vector& y = data.train.y;
  const Index n = X.rows();
  const double lambda = resolved_lambda(cfg.lambda, n);
  const double lambda_star = resolved_lambda(cfg.lambda_star, n);

  ExperimentReport report;
  report.scheme = "lws";
  report.S = cfg.S;
  report.s = cfg.s;
  report.seed = cfg.seed;
  StageClock clock(report.timings);

  // Line 1: feature pool from the spectral measure.
  const FeaturePool pool = clock.time("pool", [&] {
    return sample_pool(static_cast<int>(X.cols()), cfg.s, mix_seed(cfg.seed, kPoolStream));
  });

  const BasisConfig basis = resolve_basis(cfg.basis, X * pool.W);

  // Line 2: matrix-sensing solve for the activation on the plain pool.
  Vector a_tilde;
  JointProblem sensing(X, y, pool.W, Vector(), basis);
  if (cfg.hook_fixed_a) {
    if (cfg.hook_fixed_a->size() != basis.grid_size())
      throw std::invalid_argument("pipeline: injected activation length mismatch");
    a_tilde = *cfg.hook_fixed_a;
    report.timings.push_back({"sensing", 0.0});
  } else {
    a_tilde = clock.time("sensing", [&] {
      SgdConfig sgd = cfg.sgd;
      sgd.seed = mix_seed(cfg.seed, kSensingStream);
      sgd.lambda0 = cfg.lambda0;
      sgd.ridge_lambda = lambda;
      try {
        return sgd_joint(JointObjective::SensingEq8, X, y, pool.W, Vector(), basis,
                         sgd, cfg.loss)
            .a;
      } catch (const DivergenceError& e) {
        throw PipelineError(std::string("Algorithm 1 line 2 (sensing solve): ") +
                            e.what());
      }
    });
  }

  // Lines 3-4: leverage scores of the pool at the learned activation.
  LeverageWeights weights;
  WeightedFeatures wf;
  if (cfg.hook_uniform_q) {
    weights.q = Vector::Constant(cfg.s, 1.0 / cfg.s);
    weights.raw = Vector::Ones(cfg.s);
    weights.lambda = lambda;
    wf.W_tilde = pool.W;
    wf.q_diag = cfg.q_mode == QMode::Section24
                    ? Vector::Ones(cfg.s)
                    : Vector::Constant(cfg.s, std::sqrt(double(cfg.s)));
    wf.source_indices.resize(static_cast<size_t>(cfg.s));
    std::iota(wf.source_indices.begin(), wf.source_indices.end(), 0);
    report.timings.push_back({"leverage", 0.0});
    report.timings.push_back({"resample", 0.0});
  } else {
    weights = clock.time("leverage", [&] {
      try {
        return leverage_weights(sensing.z_matrix(a_tilde), lambda,
                                static_cast<int>(n));
      } catch (const DegeneratePoolError& e) {
        throw PipelineError(std::string("Algorithm 1 line 3 (leverage scores): ") +
                            e.what());
      }
    });
    // Line 5: multinomial resample with importance weights.
    wf = clock.time("resample", [&] {
      return resample_weighted(pool, weights, cfg.S,
                               mix_seed(cfg.seed, kResampleStream), cfg.q_mode);
    });
  }
  fill_q_stats(report, weights.q);

  // Line 6: weighted solve of the main problem.
  SgdConfig sgd = cfg.sgd;
  sgd.seed = mix_seed(cfg.seed, kFinalStream);
  sgd.lambda0 = 0.0;
  sgd.ridge_lambda = lambda_star;
  if (cfg.warm_start_final) sgd.init_a = a_tilde;
  const SgdResult fit = clock.time("final", [&] {
    try {
      return sgd_joint(JointObjective::MainEq5, X, y, wf.W_tilde, wf.q_diag,
                       basis, sgd, cfg.loss);
    } catch (const DivergenceError& e) {
      throw PipelineError(std::string("Algorithm 1 line 6 (weighted solve): ") +
                          e.what());
    }
  });

  RflafModel model{basis, fit.a, fit.v, wf.W_tilde, wf.q_diag};
  clock.time("evaluate", [&] {
    report.train_loss =
        loss_eval(cfg.loss, model.predict(data.train.X), data.train.y);
    report.test_loss =
        loss_eval(cfg.loss, model.predict(data.test.X), data.test.y);
    report.d_eff =
        effective_dimension_of_features(sensing.z_matrix(a_tilde), cfg.s, lambda_star);
  });
  return {std::move(model), std::move(report)};
}

std::pair<RflafModel, ExperimentReport> run_plain(const Split& data,
                                                  const PipelineConfig& cfg) {
  cfg.validate();
  const Matrix& X = data.train.X;
  const Vector& y = data.train.y;
  const Index n = X.rows();
  const double lambda_star = resolved_lambda(cfg.lambda_star, n);

  ExperimentReport report;
  report.scheme = "ps";
  report.S = cfg.S;
  report.s = cfg.S; // no pool stage
  report.seed = cfg.seed;
  StageClock clock(report.timings);

  const FeaturePool pool = clock.time("pool", [&] {
    return sample_pool(static_cast<int>(X.cols()), cfg.S, mix_seed(cfg.seed, kPoolStream));
  });
  const BasisConfig basis = resolve_basis(cfg.basis, X * pool.W);

  SgdConfig sgd = cfg.sgd;
  sgd.seed = mix_seed(cfg.seed, kFinalStream);
  sgd.lambda0 = 0.0;
  sgd.ridge_lambda = lambda_star;
  const SgdResult fit = clock.time("final", [&] {
    try {
      return sgd_joint(JointObjective::MainEq5, X, y, pool.W, Vector(), basis,
                       sgd, cfg.loss);
    } catch (const DivergenceError& e) {
      throw PipelineError(std::string("plain pipeline (main solve): ") + e.what());
    }
  });

  RflafModel model{basis, fit.a, fit.v, pool.W, Vector::Ones(cfg.S)};
  const Vector q = Vector::Constant(cfg.S, 1.0 / cfg.S);
  fill_q_stats(report, q);
  clock.time("evaluate", [&] {
    report.train_loss =
        loss_eval(cfg.loss, model.predict(data.train.X), data.train.y);
    report.test_loss =
        loss_eval(cfg.loss, model.predict(data.test.X), data.test.y);
    JointProblem prob(X, y, pool.W, Vector(), basis);
    report.d_eff = effective_dimension_of_features(prob.z_matrix(fit.a), cfg.S, lambda_star);
  });
  return {std::move(model), std::move(report)};
}

Vector RflafModel::predict(const Matrix& X) const {
  ActivationCoeffs coeffs{a, a.norm()};
  const FeatureMatrix fm = feature_matrix(X, W, q_diag, coeffs, basis);
  return fm.Z * v;
}

double excess_risk(const RflafModel& model, const SyntheticTruth& truth,
                   int n_test, std::uint64_t seed, LossKind kind) {
  if (n_test < 1) throw std::invalid_argument("excess_risk: n_test must be >= 1");
  auto rng = make_rng(mix_seed(seed, 23));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix X(n_test, truth.dim());
  for (Index i = 0; i < n_test; ++i)
    for (Index c = 0; c < truth.dim(); ++c) X(i, c) = gauss(rng);
  Vector fstar = truth.f_star(X);
  Vector ytest(n_test);
  const double sigma = std::sqrt(truth.noise_var);
  for (Index i = 0; i < n_test; ++i) {
    const double noisy = fstar[i] + sigma * gauss(rng);
    ytest[i] = truth.clip_y0 > 0.0 ? std::clamp(noisy, -truth.clip_y0, truth.clip_y0)
                                   : noisy;
  }
  const Vector pred = model.predict(X);
  if (kind == LossKind::Mse)
    return loss_eval(kind, pred, ytest) - truth.noise_var;
  return loss_eval(kind, pred, ytest) - loss_eval(kind, fstar, ytest);
}

Lemma22Result lemma22_check(const Lemma22Config& cfg) {
  if (cfg.n < 1 || cfg.d < 1 || cfg.ref_pool < 1 || cfg.trials < 1)
    throw std::invalid_argument("lemma22_check: counts must be >= 1");
  if (!(cfg.lambda > 0.0) || !(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw std::invalid_argument("lemma22_check: bad lambda or delta");

  auto rng = make_rng(mix_seed(cfg.seed, 31));
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix X(cfg.n, cfg.d);
  for (Index i = 0; i < cfg.n; ++i)
    for (Index c = 0; c < cfg.d; ++c) X(i, c) = gauss(rng);

  const FeaturePool pool =
      sample_pool(cfg.d, cfg.ref_pool, mix_seed(cfg.seed, 32));
  const BasisConfig basis =
      resolve_basis(BasisSpec{BasisKind::Rbf, 3, cfg.n_grid, 0, 0, 0}, X * pool.W);

  // Smooth activation: least-squares fit of a bounded bump on the extent.
  std::vector<std::pair<double, double>> samples;
  const Vector grid = make_grid(basis.extent_lo, basis.extent_hi, 257);
  for (Index g = 0; g < grid.size(); ++g)
    samples.emplace_back(grid[g],
                         target_activation_value(TargetActivation::Gauss, grid[g]));
  const ActivationCoeffs coeffs = fit_activation(samples, basis, 1e-10).coeffs;

  // Pool feature responses and the kernel they induce under the empirical
  // measure on the pool atoms.
  JointProblem prob(X, Vector::Zero(cfg.n), pool.W, Vector(), basis);
  const Matrix Z = prob.z_matrix(coeffs.a); // n x ref_pool

  const double d_eff = effective_dimension_of_features(Z, cfg.ref_pool, cfg.lambda);
  int threshold = 1;
  if (d_eff > 0.0) {
    const double raw = 5.0 * d_eff * std::log(16.0 * d_eff / cfg.delta);
    if (raw > 1.0) threshold = static_cast<int>(std::ceil(raw));
  }

  // Unit-norm finite mixture over the atoms: |f|_H <= 1.
  Vector beta(cfg.ref_pool);
  for (Index i = 0; i < cfg.ref_pool; ++i) beta[i] = gauss(rng);
  beta *= std::sqrt(static_cast<double>(cfg.ref_pool)) / beta.norm();
  const Vector f_tilde = Z * beta / static_cast<double>(cfg.ref_pool);

  const LeverageWeights weights =
      leverage_weights(Z, cfg.lambda, cfg.n);

  Lemma22Result result;
  result.threshold_s = threshold;
  result.d_eff = d_eff;
  int successes = 0;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const WeightedFeatures wf =
        resample_weighted(pool, weights, threshold,
                          mix_seed(cfg.seed, 100 + static_cast<std::uint64_t>(trial)),
                          QMode::Section24);
    Matrix Zq(cfg.n, threshold);
    for (int m = 0; m < threshold; ++m)
      Zq.col(m) = Z.col(wf.source_indices[static_cast<size_t>(m)]) * wf.q_diag[m];
    const Vector v = ridge_solve({Zq, f_tilde, cfg.lambda});
    const double objective =
        (Zq * v - f_tilde).squaredNorm() / static_cast<double>(cfg.n) +
        cfg.lambda * threshold * v.squaredNorm();
    result.objectives.push_back(objective);
    if (objective <= 2.0 * cfg.lambda) ++successes;
  }
  result.success_rate = static_cast<double>(successes) / cfg.trials;
  return result;
}

double ExperimentReport::total_seconds() const {
  double total = 0.0;
  for (const auto& t : timings) total += t.seconds;
  return total;
}

std::string ExperimentReport::to_json() const {
  nlohmann::json j;
  j["schema"] = 1;
  j["scheme"] = scheme;
  j["S"] = S;
  j["s"] = s;
  j["seed"] = seed;
  j["train_loss"] = train_loss;
  j["test_loss"] = test_loss;
  j["d_eff"] = d_eff;
  j["q"] = {{"min", q_min}, {"max", q_max}, {"entropy", q_entropy}};
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& t : timings)
    stages.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  j["timings"] = stages;
  j["model_ref"] = model_ref;
  return j.dump(2);
}

ExperimentReport ExperimentReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ExperimentReport r;
  r.scheme = j.at("scheme").get<std::string>();
  r.S = j.at("S").get<int>();
  r.s = j.at("s").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.train_loss = j.at("train_loss").get<double>();
  r.test_loss = j.at("test_loss").get<double>();
  r.d_eff = j.at("d_eff").get<double>();
  r.q_min = j.at("q").at("min").get<double>();
  r.q_max = j.at("q").at("max").get<double>();
  r.q_entropy = j.at("q").at("entropy").get<double>();
  for (const auto& t : j.at("timings"))
    r.timings.push_back({t.at("stage").get<std::string>(),
                         t.at("seconds").get<double>()});
  r.model_ref = j.value("model_ref", "");
  return r;
}

void RflafModel::save(const std::string& path) const {
  nlohmann::json j;
  j["schema"] = 1;
  j["basis"] = basis.to_config();
  j["a"] = std::vector<double>(a.data(), a.data() + a.size());
  j["v"] = std::vector<double>(v.data(), v.data() + v.size());
  j["q_diag"] = std::vector<double>(q_diag.data(), q_diag.data() + q_diag.size());
  std::vector<std::vector<double>> w(static_cast<size_t>(W.rows()));
  for (Index r = 0; r < W.rows(); ++r)
    for (Index c = 0; c < W.cols(); ++c) w[static_cast<size_t>(r)].push_back(W(r, c));
  j["w"] = w;
  std::ofstream out(path);
  if (!out) throw DataError("RflafModel::save: cannot open " + path);
  out << j.dump(2) << "\n";
}

RflafModel RflafModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("RflafModel::load: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto j = nlohmann::json::parse(ss.str());
  RflafModel m;
  m.basis = BasisConfig::from_config(j.at("basis").get<std::string>());
  const auto a = j.at("a").get<std::vector<double>>();
  m.a = Eigen::Map<const Vector>(a.data(), static_cast<Index>(a.size()));
  const auto v = j.at("v").get<std::vector<double>>();
  m.v = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
  const auto q = j.at("q_diag").get<std::vector<double>>();
  m.q_diag = Eigen::Map<const Vector>(q.data(), static_cast<Index>(q.size()));
  const auto w = j.at("w").get<std::vector<std::vector<double>>>();
  if (w.empty()) throw DataError("RflafModel::load: empty feature matrix");
  m.W.resize(static_cast<Index>(w.size()), static_cast<Index>(w[0].size()));
  for (Index r = 0; r < m.W.rows(); ++r)
    for (Index c = 0; c < m.W.cols(); ++c)
      m.W(r, c) = w[static_cast<size_t>(r)][static_cast<size_t>(c)];
  return m;
}

} // namespace rflaf
