#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rflaf/data.hpp"
#include "rflaf/errors.hpp"
#include "rflaf/pipeline.hpp"
#include "rflaf/sweep.hpp"
#include "rflaf/verify.hpp"

namespace {

using namespace rflaf;

struct CommonOpts {
  std::string scheme = "ps";
  std::string dataset;
  std::string label = "y";
  std::string task = "regression";
  std::string basis = "rbf";
  std::string q_mode = "section24";
  std::string out;
  int S = 50;
  int pool_size = 0; // 0: desk-scale default 300, paper scale 3000
  int grid = 16;
  int seeds = 8;
  int epochs = 40;
  int batch = 128;
  double lr = 1e-3;
  double lambda = 0.0;
  double lambda0 = 1e-3;
  double lambda_star = 0.0;
  std::uint64_t seed = 0;
  bool paper_scale = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_scheme = true) {
  if (with_scheme)
    cmd->add_option("--scheme", o.scheme, "Sampling scheme: ps or lws")
        ->check(CLI::IsMember({"ps", "lws"}));
  cmd->add_option("--dataset", o.dataset, "CSV dataset path")->required();
  cmd->add_option("--label", o.label, "Label column name");
  cmd->add_option("--task", o.task, "regression or classification")
      ->check(CLI::IsMember({"regression", "classification"}));
  cmd->add_option("--S", o.S, "Number of resampled features");
  cmd->add_option("--pool-size", o.pool_size, "LWS feature pool size");
  cmd->add_option("--grid", o.grid, "Basis grid size N");
  cmd->add_option("--basis", o.basis, "Basis family: rbf or bspline")
      ->check(CLI::IsMember({"rbf", "bspline"}));
  cmd->add_option("--lambda", o.lambda, "Leverage ridge (default 1/sqrt(n))");
  cmd->add_option("--lambda0", o.lambda0, "Balancing penalty weight");
  cmd->add_option("--lambda-star", o.lambda_star, "Final ridge (default 1/sqrt(n))");
  cmd->add_option("--q-mode", o.q_mode, "Importance weight convention")
      ->check(CLI::IsMember({"section24", "algo1"}));
  cmd->add_option("--seeds", o.seeds, "Number of sweep seeds");
  cmd->add_option("--seed", o.seed, "Root seed for a single run");
  cmd->add_option("--epochs", o.epochs, "SGD epochs");
  cmd->add_option("--batch", o.batch, "SGD minibatch size");
  cmd->add_option("--lr", o.lr, "SGD learning rate");
  cmd->add_option("--out", o.out, "Output path");
  cmd->add_flag("--paper-scale", o.paper_scale,
                "Use the full-size pool defaults (slow)");
}

PipelineConfig to_pipeline_config(const CommonOpts& o) {
  PipelineConfig cfg;
  cfg.S = o.S;
  cfg.s = o.pool_size > 0 ? o.pool_size : (o.paper_scale ? 3000 : 300);
  cfg.lambda = o.lambda;
  cfg.lambda0 = o.lambda0;
  cfg.lambda_star = o.lambda_star;
  cfg.q_mode = o.q_mode == "algo1" ? QMode::Algo1Literal : QMode::Section24;
  cfg.loss = o.task == "classification" ? LossKind::CrossEntropy : LossKind::Mse;
  cfg.seed = o.seed;
  cfg.basis.kind = o.basis == "bspline" ? BasisKind::BSpline : BasisKind::Rbf;
  cfg.basis.n_grid = o.grid;
  cfg.sgd.learning_rate = o.lr;
  cfg.sgd.epochs = o.epochs;
  cfg.sgd.batch_size = o.batch;
  return cfg;
}

Split load_split(const CommonOpts& o, std::uint64_t seed) {
  if (!std::filesystem::exists(o.dataset))
    throw ConfigError("dataset not found: " + o.dataset);
  const TaskKind task = o.task == "classification" ? TaskKind::Classification
                                                   : TaskKind::Regression;
  const Dataset ds = load_csv(o.dataset, o.label, task);
  auto [train, test] = standardize_split(ds, 0.2, seed);
  return Split{std::move(train), std::move(test)};
}

int cmd_train(const CommonOpts& o) {
  const Split data = load_split(o, o.seed);
  PipelineConfig cfg = to_pipeline_config(o);
  auto [model, report] = o.scheme == "lws" ? run_algorithm1(data, cfg)
                                           : run_plain(data, cfg);
  const std::string out = o.out.empty() ? "report.json" : o.out;
  const std::string model_path =
      out.size() > 5 && out.substr(out.size() - 5) == ".json"
          ? out.substr(0, out.size() - 5) + ".model.json"
          : out + ".model.json";
  model.save(model_path);
  report.model_ref = model_path;
  std::ofstream f(out);
  if (!f) throw DataError("cannot open " + out);
  f << report.to_json() << "\n";
  std::cout << "scheme " << report.scheme << "  S " << report.S << "  seed "
            << report.seed << "  train " << report.train_loss << "  test "
            << report.test_loss << "  d_eff " << report.d_eff << "\n"
            << "report: " << out << "\nmodel:  " << model_path << "\n";
  return 0;
}

int cmd_sweep(const CommonOpts& o, const std::vector<std::string>& schemes,
              const std::vector<int>& S_list) {
  const Split data = load_split(o, o.seed);
  SweepSpec spec;
  if (!schemes.empty()) spec.schemes = schemes;
  if (!S_list.empty()) spec.S_list = S_list;
  spec.pool_sizes = o.pool_size > 0
                        ? std::vector<int>{o.pool_size}
                        : (o.paper_scale ? std::vector<int>{3000, 5000}
                                         : std::vector<int>{300, 500});
  spec.seeds = o.seeds;
  spec.base = to_pipeline_config(o);
  const SweepResult result = run_sweep(spec, data);
  const std::string out = o.out.empty() ? "sweep.csv" : o.out;
  save_sweep_csv(result, out);
  int failed = 0;
  for (const auto& c : result.cells) failed += c.failed ? 1 : 0;
  std::cout << result.cells.size() << " cells (" << failed << " failed), "
            << result.summaries.size() << " summary rows -> " << out << "\n";
  for (const auto& s : result.summaries)
    std::cout << "  " << s.scheme << " S=" << s.S << " mean test "
              << s.test_mean << " [" << s.test_lo80 << ", " << s.test_hi80
              << "]\n";
  return failed == 0 ? 0 : 1;
}

int cmd_verify(const std::string& suite, const std::string& out_path) {
  std::vector<CheckResult> results;
  const auto run_study_checks = [&] {
    const Split task = make_exponential_task();
    const LwsPsStudy study = run_lws_ps_study(task);
    results.push_back(verify_lws_vs_ps(study));
    if (suite == "all") results.push_back(verify_monotone_width(study));
  };

  if (suite == "woodbury") results.push_back(verify_woodbury());
  else if (suite == "effdim") results.push_back(verify_effdim());
  else if (suite == "lemma22") results.push_back(verify_lemma22());
  else if (suite == "leverage_bound") results.push_back(verify_leverage_bound());
  else if (suite == "gradcheck") results.push_back(verify_gradcheck());
  else if (suite == "unbiasedness") results.push_back(verify_unbiasedness());
  else if (suite == "lws_vs_ps") run_study_checks();
  else if (suite == "all") {
    results.push_back(verify_woodbury());
    results.push_back(verify_effdim());
    results.push_back(verify_lemma22());
    results.push_back(verify_leverage_bound());
    results.push_back(verify_gradcheck());
    results.push_back(verify_unbiasedness());
    results.push_back(verify_degeneracy());
    results.push_back(verify_lemma21_trend());
    run_study_checks();
  } else {
    throw ConfigError("unknown verify suite '" + suite + "'");
  }

  bool all_passed = true;
  nlohmann::json j;
  j["schema"] = 1;
  j["suites"] = nlohmann::json::array();
  for (const auto& r : results) {
    all_passed = all_passed && r.passed;
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.suite << "\n";
    for (const auto& line : r.details) std::cout << "       " << line << "\n";
    nlohmann::json js;
    js["suite"] = r.suite;
    js["passed"] = r.passed;
    js["details"] = r.details;
    js["measured"] = r.measured;
    j["suites"].push_back(js);
  }
  j["passed"] = all_passed;
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw DataError("cannot open " + out_path);
    f << j.dump(2) << "\n";
  }
  if (!all_passed) std::cout << j.dump(2) << "\n";
  return all_passed ? 0 : 1;
}

int cmd_synth(const std::string& kind, int n, int d, int M, double noise,
              std::uint64_t seed, const std::string& out) {
  const TargetActivation act = [&] {
    if (kind == "identity") return TargetActivation::Identity;
    if (kind == "cos") return TargetActivation::Cos;
    if (kind == "sin") return TargetActivation::Sin;
    if (kind == "gauss") return TargetActivation::Gauss;
    throw ConfigError("unknown activation '" + kind + "'");
  }();
  const SyntheticTruth truth = make_truth(act, d, M, noise, seed);
  const Dataset ds = synth_target(truth, n, seed);
  save_csv(ds, out);
  std::ofstream f(out + ".truth.json");
  if (!f) throw DataError("cannot open " + out + ".truth.json");
  f << truth.to_json() << "\n";
  std::cout << "wrote " << out << " (n=" << n << ", d=" << d << ") and "
            << out << ".truth.json\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-feature models with learnable activations: training, "
               "leverage-weighted sampling, sweeps, and verification suites"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  auto* train = app.add_subcommand("train", "Train one model and write a JSON report");
  add_common(train, train_opts);

  CommonOpts sweep_opts;
  std::vector<std::string> sweep_schemes;
  std::vector<int> sweep_S;
  auto* sweep = app.add_subcommand("sweep", "Run a (scheme, S, seed) grid and write CSV");
  add_common(sweep, sweep_opts, false);
  sweep->add_option("--schemes", sweep_schemes, "Schemes to sweep (default lws ps)");
  sweep->add_option("--S-list", sweep_S, "Feature counts (default 30 50 100 300 500 1000)");

  std::string verify_suite = "all";
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("suite", verify_suite,
                     "woodbury|effdim|lemma22|leverage_bound|gradcheck|"
                     "unbiasedness|lws_vs_ps|all");
  verify->add_option("--out", verify_out, "Write a machine-readable JSON report");

  std::string synth_kind = "sin", synth_out = "synth.csv";
  int synth_n = 2000, synth_d = 10, synth_M = 64;
  double synth_noise = 0.01;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic regression CSV");
  synth->add_option("--activation", synth_kind, "identity|cos|sin|gauss");
  synth->add_option("--n", synth_n, "Rows");
  synth->add_option("--d", synth_d, "Input dimension");
  synth->add_option("--mixture", synth_M, "Planted feature count");
  synth->add_option("--noise", synth_noise, "Noise variance");
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--out", synth_out, "Output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_opts);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, sweep_schemes, sweep_S);
    if (verify->parsed()) return cmd_verify(verify_suite, verify_out);
    if (synth->parsed())
      return cmd_synth(synth_kind, synth_n, synth_d, synth_M, synth_noise,
                       synth_seed, synth_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
