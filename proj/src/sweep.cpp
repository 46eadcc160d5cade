#include "rflaf/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

#include "rflaf/errors.hpp"

namespace rflaf {

namespace {

// Student-t 0.9 quantiles for the 80% two-sided interval, df 1..30, then the
// normal limit.
double t90_quantile(int df) {
  static const double table[] = {3.078, 1.886, 1.638, 1.533, 1.476, 1.440,
                                 1.415, 1.397, 1.383, 1.372, 1.363, 1.356,
                                 1.350, 1.345, 1.341, 1.337, 1.333, 1.330,
                                 1.328, 1.325, 1.323, 1.321, 1.319, 1.318,
                                 1.316, 1.315, 1.314, 1.313, 1.311, 1.310};
  if (df < 1) return table[0];
  if (df <= 30) return table[df - 1];
  return 1.2816;
}

} // namespace

void SweepSpec::validate() const {
  if (schemes.empty()) throw std::invalid_argument("sweep: empty scheme list");
  if (S_list.empty()) throw std::invalid_argument("sweep: empty S list");
  if (pool_sizes.empty()) throw std::invalid_argument("sweep: empty pool list");
  if (seeds < 1) throw std::invalid_argument("sweep: seeds must be >= 1");
  for (const auto& s : schemes)
    if (s != "lws" && s != "ps")
      throw std::invalid_argument("sweep: unknown scheme '" + s + "'");
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RFLAF_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

SweepResult run_sweep(const SweepSpec& spec, const Split& data, int workers) {
  spec.validate();
  struct CellSpec {
    std::string scheme;
    int S;
    std::uint64_t seed;
  };
  std::vector<CellSpec> grid;
  for (const auto& scheme : spec.schemes)
    for (const int S : spec.S_list)
      for (int seed = 0; seed < spec.seeds; ++seed)
        grid.push_back({scheme, S, static_cast<std::uint64_t>(seed)});

  SweepResult result;
  result.cells.resize(grid.size());

  const int pool = spec.pool_sizes.front();
  auto run_cell = [&](size_t idx) {
    const auto& cell = grid[idx];
    SweepCell out;
    out.scheme = cell.scheme;
    out.S = cell.S;
    out.seed = cell.seed;
    try {
      PipelineConfig cfg = spec.base;
      cfg.S = cell.S;
      cfg.s = pool;
      cfg.seed = cell.seed;
      const auto [model, report] = cell.scheme == "lws"
                                       ? run_algorithm1(data, cfg)
                                       : run_plain(data, cfg);
      out.train_loss = report.train_loss;
      out.test_loss = report.test_loss;
      out.d_eff = report.d_eff;
      out.seconds = report.total_seconds();
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
      out.train_loss = out.test_loss = out.d_eff =
          std::numeric_limits<double>::quiet_NaN();
    }
    result.cells[idx] = std::move(out);
  };

  const int n_workers =
      std::min<int>(worker_count(workers), static_cast<int>(grid.size()));
  if (n_workers <= 1) {
    for (size_t i = 0; i < grid.size(); ++i) run_cell(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    for (int w = 0; w < n_workers; ++w)
      threads.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1))
          run_cell(i);
      });
    for (auto& t : threads) t.join();
  }

  // Per-(scheme, S) means with an 80% t-interval on the test loss over seeds.
  for (const auto& scheme : spec.schemes) {
    for (const int S : spec.S_list) {
      std::vector<const SweepCell*> cells;
      for (const auto& c : result.cells)
        if (c.scheme == scheme && c.S == S && !c.failed) cells.push_back(&c);
      if (cells.empty()) continue;
      SweepSummary sum;
      sum.scheme = scheme;
      sum.S = S;
      const double k = static_cast<double>(cells.size());
      for (const auto* c : cells) {
        sum.train_mean += c->train_loss / k;
        sum.test_mean += c->test_loss / k;
        sum.d_eff_mean += c->d_eff / k;
        sum.secs_mean += c->seconds / k;
      }
      double var = 0.0;
      for (const auto* c : cells) {
        const double diff = c->test_loss - sum.test_mean;
        var += diff * diff;
      }
      if (cells.size() > 1) {
        var /= k - 1.0;
        const double half =
            t90_quantile(static_cast<int>(cells.size()) - 1) * std::sqrt(var / k);
        sum.test_lo80 = sum.test_mean - half;
        sum.test_hi80 = sum.test_mean + half;
      } else {
        sum.test_lo80 = sum.test_hi80 = sum.test_mean;
      }
      result.summaries.push_back(sum);
    }
  }
  return result;
}

double SweepResult::mean_test_loss(const std::string& scheme, int S) const {
  for (const auto& s : summaries)
    if (s.scheme == scheme && s.S == S) return s.test_mean;
  throw std::invalid_argument("sweep: no summary for scheme '" + scheme +
                              "', S = " + std::to_string(S));
}

void save_sweep_csv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_sweep_csv: cannot open " + path);
  out.precision(17);
  out << "scheme,S,seed,train_loss,test_loss,d_eff,secs,test_lo80,test_hi80,error\n";
  for (const auto& c : result.cells)
    out << c.scheme << "," << c.S << "," << c.seed << "," << c.train_loss << ","
        << c.test_loss << "," << c.d_eff << "," << c.seconds << ",,,"
        << c.error << "\n";
  for (const auto& s : result.summaries)
    out << s.scheme << "," << s.S << ",mean," << s.train_mean << ","
        << s.test_mean << "," << s.d_eff_mean << "," << s.secs_mean << ","
        << s.test_lo80 << "," << s.test_hi80 << ",\n";
}

} // namespace rflaf
