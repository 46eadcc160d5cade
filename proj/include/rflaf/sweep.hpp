#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rflaf/pipeline.hpp"

namespace rflaf {

/// Grid of (scheme, S, seed) pipeline runs over one dataset. LWS cells use
/// pool_sizes.front() as the pool.
struct SweepSpec {
  std::vector<std::string> schemes = {"lws", "ps"};
  std::vector<int> S_list = {30, 50, 100, 300, 500, 1000};
  std::vector<int> pool_sizes = {300, 500}; // paper scale: {3000, 5000}
  int seeds = 8;
  PipelineConfig base;

  void validate() const;
};

struct SweepCell {
  std::string scheme;
  int S = 0;
  std::uint64_t seed = 0;
  double train_loss = 0.0, test_loss = 0.0, d_eff = 0.0, seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct SweepSummary {
  std::string scheme;
  int S = 0;
  double train_mean = 0.0, test_mean = 0.0, d_eff_mean = 0.0, secs_mean = 0.0;
  double test_lo80 = 0.0, test_hi80 = 0.0; // 80% confidence interval
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<SweepSummary> summaries;

  double mean_test_loss(const std::string& scheme, int S) const;
};

/// Runs every (scheme, S, seed) cell; failures are recorded per row and the
/// sweep continues. `workers` <= 0 reads RFLAF_THREADS (default 1).
SweepResult run_sweep(const SweepSpec& spec, const Split& data, int workers = 0);

void save_sweep_csv(const SweepResult& result, const std::string& path);

/// Worker bound from RFLAF_THREADS, default when unset or invalid.
int worker_count(int requested);

} // namespace rflaf
