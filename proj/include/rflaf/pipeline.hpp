#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rflaf/basis.hpp"
#include "rflaf/data.hpp"
#include "rflaf/features.hpp"
#include "rflaf/solvers.hpp"
#include "rflaf/types.hpp"

namespace rflaf {

/// Basis request resolved against the observed feature projections: extent
/// defaults to +-3 std of w^T x over pool and training data, width to
/// (hi - lo)/(N - 1).
struct BasisSpec {
  BasisKind kind = BasisKind::Rbf;
  int order = 3;
  int n_grid = 16;
  double extent_lo = 0.0, extent_hi = 0.0; // lo >= hi requests auto extent
  double width = 0.0;                      // <= 0 requests the default width
};

BasisConfig resolve_basis(const BasisSpec& spec, const Matrix& projections);

struct PipelineConfig {
  int s = 300;               // feature pool size
  int S = 50;                // resampled feature count
  double lambda0 = 1e-3;     // balancing penalty weight of the sensing step
  double lambda = 0.0;       // leverage-score ridge; <= 0 derives 1/sqrt(n)
  double lambda_star = 0.0;  // final ridge; <= 0 derives 1/sqrt(n)
  QMode q_mode = QMode::Section24;
  SgdConfig sgd;             // seed field ignored; stage seeds derive from `seed`
  BasisSpec basis;
  LossKind loss = LossKind::Mse;
  std::uint64_t seed = 0;
  bool warm_start_final = true; // final stage starts from the sensing a

  // Test hooks.
  bool hook_uniform_q = false;        // take every pool feature once, unit q
  std::optional<Vector> hook_fixed_a; // skip the sensing solve, use this a

  void validate() const;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct ExperimentReport {
  std::string scheme; // "lws" or "ps"
  int S = 0, s = 0;
  std::uint64_t seed = 0;
  double train_loss = 0.0, test_loss = 0.0;
  double d_eff = 0.0; // at lambda_star
  double q_min = 0.0, q_max = 0.0, q_entropy = 0.0;
  std::vector<StageTiming> timings;
  std::string model_ref;

  double total_seconds() const;
  std::string to_json() const;
  static ExperimentReport from_json(const std::string& text);
};

struct RflafModel {
  BasisConfig basis;
  Vector a;
  Vector v;
  Matrix W;      // d x S
  Vector q_diag; // S

  Vector predict(const Matrix& X) const;
  void save(const std::string& path) const;
  static RflafModel load(const std::string& path);
};

struct Split {
  Dataset train;
  Dataset test;
};

/// Full leverage-weighted pipeline: pool sample, sensing solve, leverage
/// weights, multinomial resample, final weighted solve.
std::pair<RflafModel, ExperimentReport> run_algorithm1(const Split& data,
                                                       const PipelineConfig& cfg);

/// Plain-sampling baseline: S features straight from the spectral measure,
/// unit weights, final solve only.
std::pair<RflafModel, ExperimentReport> run_plain(const Split& data,
                                                  const PipelineConfig& cfg);

/// Monte Carlo estimate of the population risk gap to the truth: for Mse,
/// E[(f(x) - y)^2] - sigma^2; otherwise E[l_f] - E[l_{f*}].
double excess_risk(const RflafModel& model, const SyntheticTruth& truth,
                   int n_test, std::uint64_t seed,
                   LossKind kind = LossKind::Mse);

struct Lemma22Config {
  int n = 200;
  int d = 5;
  int ref_pool = 2000; // atoms standing in for the spectral measure
  double lambda = 0.05;
  double delta = 0.1;
  int trials = 50;
  int n_grid = 16;
  std::uint64_t seed = 0;
};

struct Lemma22Result {
  double success_rate = 0.0;
  int threshold_s = 0;
  double d_eff = 0.0;
  std::vector<double> objectives; // per-trial closed-form inner objectives
};

/// Empirical check of the 2-lambda ridge guarantee: repeatedly resamples
/// features at the s >= 5 d log(16 d / delta) threshold and measures how
/// often the closed-form inner objective stays below 2 lambda.
Lemma22Result lemma22_check(const Lemma22Config& cfg);

} // namespace rflaf
