#include "rflaf/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rflaf/errors.hpp"
#include "rflaf/rng.hpp"

namespace rflaf {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) {
    // strip surrounding whitespace and CR
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == delim) cells.push_back("");
  return cells;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  char* end = nullptr;
  out = std::strtod(cell.c_str(), &end);
  return end == cell.c_str() + cell.size() && std::isfinite(out);
}

} // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 TaskKind task, char delimiter) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("load_csv: empty file " + path);
  const auto header = split_line(line, delimiter);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end())
    throw ConfigError("load_csv: label column '" + label_column +
                      "' not found in " + path);
  const size_t label_idx = static_cast<size_t>(label_it - header.begin());
  const size_t width = header.size();

  std::vector<std::vector<std::string>> raw;
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    auto cells = split_line(line, delimiter);
    if (cells.size() != width)
      throw DataError("load_csv: row " + std::to_string(row_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(width));
    raw.push_back(std::move(cells));
  }
  if (raw.empty()) throw DataError("load_csv: no data rows in " + path);
  const size_t n = raw.size();

  // Column types from the first data row.
  std::vector<bool> numeric(width);
  for (size_t c = 0; c < width; ++c) {
    double tmp;
    numeric[c] = parse_number(raw[0][c], tmp);
  }

  std::vector<size_t> feature_cols;
  for (size_t c = 0; c < width; ++c)
    if (c != label_idx) feature_cols.push_back(c);

  // Categorical levels, sorted for a deterministic encoding.
  std::map<size_t, std::vector<std::string>> levels;
  for (size_t c : feature_cols) {
    if (numeric[c]) continue;
    std::vector<std::string> values;
    for (const auto& row : raw) values.push_back(row[c]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    levels[c] = std::move(values);
  }

  Index d = 0;
  std::vector<std::string> names;
  for (size_t c : feature_cols) {
    if (numeric[c]) {
      names.push_back(header[c]);
      ++d;
    } else {
      for (const auto& lv : levels[c]) names.push_back(header[c] + "=" + lv);
      d += static_cast<Index>(levels[c].size());
    }
  }

  Dataset ds;
  ds.task = task;
  ds.feature_names = names;
  ds.X = Matrix::Zero(static_cast<Index>(n), d);
  ds.y.resize(static_cast<Index>(n));

  std::vector<std::string> label_levels;
  if (task == TaskKind::Classification && !numeric[label_idx]) {
    for (const auto& row : raw) label_levels.push_back(row[label_idx]);
    std::sort(label_levels.begin(), label_levels.end());
    label_levels.erase(std::unique(label_levels.begin(), label_levels.end()),
                       label_levels.end());
  }

  for (size_t r = 0; r < n; ++r) {
    Index col = 0;
    for (size_t c : feature_cols) {
      if (numeric[c]) {
        double val;
        if (!parse_number(raw[r][c], val))
          throw DataError("load_csv: non-numeric cell at row " +
                          std::to_string(r + 2) + ", column '" + header[c] + "'");
        ds.X(static_cast<Index>(r), col++) = val;
      } else {
        const auto& lvl = levels[c];
        const auto it = std::find(lvl.begin(), lvl.end(), raw[r][c]);
        ds.X(static_cast<Index>(r), col + (it - lvl.begin())) = 1.0;
        col += static_cast<Index>(lvl.size());
      }
    }
    if (task == TaskKind::Classification && !label_levels.empty()) {
      const auto it = std::find(label_levels.begin(), label_levels.end(),
                                raw[r][label_idx]);
      ds.y[static_cast<Index>(r)] = static_cast<double>(it - label_levels.begin());
    } else {
      double val;
      if (!parse_number(raw[r][label_idx], val))
        throw DataError("load_csv: non-numeric label at row " +
                        std::to_string(r + 2) + ", column '" + header[label_idx] + "'");
      ds.y[static_cast<Index>(r)] = val;
    }
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_csv: cannot open " + path);
  out.precision(17);
  for (Index c = 0; c < ds.d(); ++c) {
    const std::string name = c < static_cast<Index>(ds.feature_names.size())
                                 ? ds.feature_names[c]
                                 : "x" + std::to_string(c);
    out << name << ",";
  }
  out << "y\n";
  for (Index r = 0; r < ds.n(); ++r) {
    for (Index c = 0; c < ds.d(); ++c) out << ds.X(r, c) << ",";
    out << ds.y[r] << "\n";
  }
}

std::pair<Dataset, Dataset> standardize_split(const Dataset& ds,
                                              double test_fraction,
                                              std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("standardize_split: fraction must be in (0,1)");
  const Index n = ds.n();
  const Index n_test = std::max<Index>(
      1, static_cast<Index>(std::lround(test_fraction * static_cast<double>(n))));
  const Index n_train = n - n_test;
  if (n_train < 1)
    throw std::invalid_argument("standardize_split: too few rows to split");

  std::vector<Index> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  auto rng = make_rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  Matrix train_X(n_train, ds.d()), test_X(n_test, ds.d());
  Vector train_y(n_train), test_y(n_test);
  for (Index i = 0; i < n_train; ++i) {
    train_X.row(i) = ds.X.row(perm[static_cast<size_t>(i)]);
    train_y[i] = ds.y[perm[static_cast<size_t>(i)]];
  }
  for (Index i = 0; i < n_test; ++i) {
    test_X.row(i) = ds.X.row(perm[static_cast<size_t>(n_train + i)]);
    test_y[i] = ds.y[perm[static_cast<size_t>(n_train + i)]];
  }

  const Vector mean = train_X.colwise().mean();
  Vector stddev(ds.d());
  for (Index c = 0; c < ds.d(); ++c) {
    const double var =
        (train_X.col(c).array() - mean[c]).square().sum() / static_cast<double>(n_train);
    stddev[c] = std::sqrt(var);
  }

  std::vector<Index> keep;
  for (Index c = 0; c < ds.d(); ++c) {
    if (stddev[c] > 1e-12) {
      keep.push_back(c);
    } else {
      std::cerr << "standardize_split: dropping constant column "
                << (c < static_cast<Index>(ds.feature_names.size())
                        ? ds.feature_names[c]
                        : std::to_string(c))
                << "\n";
    }
  }

  Dataset train, test;
  train.task = test.task = ds.task;
  train.X.resize(n_train, static_cast<Index>(keep.size()));
  test.X.resize(n_test, static_cast<Index>(keep.size()));
  train.col_mean.resize(static_cast<Index>(keep.size()));
  train.col_std.resize(static_cast<Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    const Index c = keep[k];
    train.X.col(static_cast<Index>(k)) =
        (train_X.col(c).array() - mean[c]) / stddev[c];
    test.X.col(static_cast<Index>(k)) =
        (test_X.col(c).array() - mean[c]) / stddev[c];
    train.col_mean[static_cast<Index>(k)] = mean[c];
    train.col_std[static_cast<Index>(k)] = stddev[c];
    if (c < static_cast<Index>(ds.feature_names.size())) {
      train.feature_names.push_back(ds.feature_names[static_cast<size_t>(c)]);
      test.feature_names.push_back(ds.feature_names[static_cast<size_t>(c)]);
    }
  }
  test.col_mean = train.col_mean;
  test.col_std = train.col_std;
  train.y = train_y;
  test.y = test_y;
  return {std::move(train), std::move(test)};
}

double target_activation_value(TargetActivation kind, double z) {
  switch (kind) {
    case TargetActivation::Identity: return z;
    case TargetActivation::Cos: return std::cos(z);
    case TargetActivation::Sin: return std::sin(z);
    case TargetActivation::Gauss: return std::exp(-0.5 * z * z);
  }
  return 0.0;
}

namespace {
double target_activation_sup(TargetActivation kind) {
  // crude sup bound over the effective projection range
  switch (kind) {
    case TargetActivation::Identity: return 12.0;
    default: return 1.0;
  }
}

std::string activation_name(TargetActivation kind) {
  switch (kind) {
    case TargetActivation::Identity: return "identity";
    case TargetActivation::Cos: return "cos";
    case TargetActivation::Sin: return "sin";
    case TargetActivation::Gauss: return "gauss";
  }
  return "gauss";
}

TargetActivation activation_from_name(const std::string& name) {
  if (name == "identity") return TargetActivation::Identity;
  if (name == "cos") return TargetActivation::Cos;
  if (name == "sin") return TargetActivation::Sin;
  if (name == "gauss") return TargetActivation::Gauss;
  throw ConfigError("unknown target activation '" + name + "'");
}
} // namespace

Vector SyntheticTruth::f_star(const Matrix& X) const {
  if (X.cols() != dim())
    throw std::invalid_argument("f_star: dimension mismatch");
  const Matrix proj = X * W_star; // n x M
  Vector out = Vector::Zero(X.rows());
  const double scale = 1.0 / std::sqrt(static_cast<double>(mixture_size()));
  for (Index m = 0; m < mixture_size(); ++m)
    for (Index i = 0; i < X.rows(); ++i)
      out[i] += scale * v[m] * target_activation_value(sigma_star, proj(i, m));
  return out;
}

double SyntheticTruth::sup_f_bound() const {
  return v.cwiseAbs().sum() * target_activation_sup(sigma_star) /
         std::sqrt(static_cast<double>(mixture_size()));
}

SyntheticTruth make_truth(TargetActivation sigma_star, int d, int M,
                          double noise_var, std::uint64_t seed, double v_norm) {
  if (d < 1 || M < 1) throw std::invalid_argument("make_truth: d and M must be >= 1");
  if (noise_var < 0.0) throw std::invalid_argument("make_truth: negative noise variance");
  if (!(v_norm > 0.0 && v_norm <= 1.0))
    throw std::invalid_argument("make_truth: v_norm must be in (0,1]");
  SyntheticTruth truth;
  truth.sigma_star = sigma_star;
  truth.noise_var = noise_var;
  auto rng = make_rng(mix_seed(seed, 11));
  std::normal_distribution<double> gauss(0.0, 1.0);
  truth.W_star.resize(d, M);
  for (Index m = 0; m < M; ++m)
    for (Index i = 0; i < d; ++i) truth.W_star(i, m) = gauss(rng);
  truth.v.resize(M);
  for (Index m = 0; m < M; ++m) truth.v[m] = gauss(rng);
  truth.v *= v_norm / truth.v.norm();
  truth.clip_y0 = 6.0 * std::sqrt(noise_var) + truth.sup_f_bound();
  return truth;
}

Dataset synth_target(const SyntheticTruth& truth, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synth_target: n must be >= 1");
  Dataset ds;
  ds.task = TaskKind::Regression;
  auto rng = make_rng(mix_seed(seed, 13));
  std::normal_distribution<double> gauss(0.0, 1.0);
  ds.X.resize(n, truth.dim());
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < truth.dim(); ++c) ds.X(i, c) = gauss(rng);
  ds.y = truth.f_star(ds.X);
  const double sigma = std::sqrt(truth.noise_var);
  for (Index i = 0; i < n; ++i) {
    const double noisy = ds.y[i] + sigma * gauss(rng);
    ds.y[i] = std::clamp(noisy, -truth.clip_y0, truth.clip_y0);
  }
  for (Index c = 0; c < truth.dim(); ++c)
    ds.feature_names.push_back("x" + std::to_string(c));
  return ds;
}

PlantedDataset synth_spectrum(const SpectrumRegime& regime, int n,
                              std::uint64_t seed, int rank) {
  regime.validate();
  if (n < 1) throw std::invalid_argument("synth_spectrum: n must be >= 1");
  int m = rank > 0 ? rank : n;
  if (regime.kind == SpectrumRegime::Kind::FiniteRank)
    m = std::min(m, regime.rank);
  if (m > n)
    throw std::invalid_argument("synth_spectrum: requested rank exceeds n");

  const Vector profile = regime.profile(m);

  // Random orthonormal columns via QR of a Gaussian matrix.
  auto rng = make_rng(mix_seed(seed, 17));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix G(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix U = qr.householderQ() * Matrix::Identity(n, m);

  PlantedDataset out;
  out.profile = profile;
  out.data.task = TaskKind::Regression;
  out.data.X = U * (profile.cwiseSqrt() * std::sqrt(static_cast<double>(n)))
                       .asDiagonal();
  out.gram = (out.data.X * out.data.X.transpose()) / static_cast<double>(n);

  Vector w(m);
  for (Index j = 0; j < m; ++j) w[j] = gauss(rng);
  w /= std::sqrt(static_cast<double>(m));
  out.data.y = out.data.X * w;
  for (Index i = 0; i < n; ++i) out.data.y[i] += 0.01 * gauss(rng);
  for (Index c = 0; c < m; ++c)
    out.data.feature_names.push_back("u" + std::to_string(c));
  return out;
}

std::string SyntheticTruth::to_json() const {
  nlohmann::json j;
  j["schema"] = 1;
  j["sigma_star"] = activation_name(sigma_star);
  j["noise_var"] = noise_var;
  j["clip_y0"] = clip_y0;
  j["v"] = std::vector<double>(v.data(), v.data() + v.size());
  std::vector<std::vector<double>> w(static_cast<size_t>(W_star.rows()));
  for (Index r = 0; r < W_star.rows(); ++r)
    for (Index c = 0; c < W_star.cols(); ++c) w[static_cast<size_t>(r)].push_back(W_star(r, c));
  j["w_star"] = w;
  return j.dump(2);
}

SyntheticTruth SyntheticTruth::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SyntheticTruth truth;
  truth.sigma_star = activation_from_name(j.at("sigma_star").get<std::string>());
  truth.noise_var = j.at("noise_var").get<double>();
  truth.clip_y0 = j.at("clip_y0").get<double>();
  const auto v = j.at("v").get<std::vector<double>>();
  truth.v = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
  const auto w = j.at("w_star").get<std::vector<std::vector<double>>>();
  if (w.empty()) throw ConfigError("SyntheticTruth: empty feature matrix");
  truth.W_star.resize(static_cast<Index>(w.size()),
                      static_cast<Index>(w[0].size()));
  for (Index r = 0; r < truth.W_star.rows(); ++r)
    for (Index c = 0; c < truth.W_star.cols(); ++c)
      truth.W_star(r, c) = w[static_cast<size_t>(r)][static_cast<size_t>(c)];
  return truth;
}

} // namespace rflaf
