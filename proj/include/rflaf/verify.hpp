#pragma once

#include <map>
#include <string>
#include <vector>

#include "rflaf/pipeline.hpp"
#include "rflaf/sweep.hpp"

namespace rflaf {

struct CheckResult {
  std::string suite;
  bool passed = false;
  std::vector<std::string> details;        // one line per sub-check
  std::map<std::string, double> measured;  // key quantities for reports
};

/// Primal vs dual ridge agreement over random instances (n, s <= 64).
CheckResult verify_woodbury(int instances = 100, double tolerance = 1e-8);

/// Effective dimension: eigenvalue-sum vs inverse-trace agreement plus the
/// d_eff ~ (1/lambda)^(1/t) scaling on planted polynomial spectra.
CheckResult verify_effdim();

/// Empirical 2-lambda guarantee at the feature-count threshold.
CheckResult verify_lemma22();

/// raw leverage score <= |Z column|^2 / (n lambda), exact, random configs.
CheckResult verify_leverage_bound(int configs = 20);

/// Analytic gradients of both joint objectives vs central differences.
CheckResult verify_gradcheck(int points = 10, double tolerance = 1e-4);

/// Averaged resampled Gram vs pool Gram, Section24 weights.
CheckResult verify_unbiasedness(int resamples = 1000, double tolerance = 0.05);

/// Uniform-q weighted pipeline vs the plain pipeline on seed-matched runs.
CheckResult verify_degeneracy();

/// Activation-fit sup error strictly decreasing over N in {8, 16, 32}.
CheckResult verify_lemma21_trend();

/// Desk-scale task with fast-decaying spectrum shared by the sampling-scheme
/// comparison and the width-monotonicity check.
struct LwsPsStudy {
  SweepResult sweep;
  std::vector<int> lws_S{30, 50, 100, 300};
  std::vector<int> ps_S{30, 50, 100, 200, 300};
};

Split make_exponential_task();
LwsPsStudy run_lws_ps_study(const Split& data, int seeds = 8, int workers = 0);

/// LWS(S) <= 1.05 PS(S) for S in {30,50,100,300} and LWS(50) <= PS(200).
CheckResult verify_lws_vs_ps(const LwsPsStudy& study);

/// Plain-scheme mean test loss non-increasing in S within a 5% band.
CheckResult verify_monotone_width(const LwsPsStudy& study);

} // namespace rflaf
