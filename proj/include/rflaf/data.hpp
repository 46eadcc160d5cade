#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rflaf/kernel.hpp"
#include "rflaf/types.hpp"

namespace rflaf {

enum class TaskKind { Regression, Classification };

struct Dataset {
  Matrix X;
  Vector y;
  std::vector<std::string> feature_names;
  Vector col_mean, col_std; // empty until standardized
  TaskKind task = TaskKind::Regression;

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }
};

/// Header CSV with numeric and categorical (one-hot encoded) columns.
/// Column types are inferred from the first data row; a later non-numeric
/// cell in a numeric column is a DataError naming the row and column.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 TaskKind task, char delimiter = ',');

void save_csv(const Dataset& ds, const std::string& path);

/// Seeded permutation split; train columns standardized to mean 0 / std 1,
/// test transformed with the train statistics. Constant train columns are
/// dropped from both with a warning on stderr.
std::pair<Dataset, Dataset> standardize_split(const Dataset& ds,
                                              double test_fraction,
                                              std::uint64_t seed);

enum class TargetActivation { Identity, Cos, Sin, Gauss };

double target_activation_value(TargetActivation kind, double z);

/// Finite-mixture member of the target class: f*(x) = sum_m v_m
/// sigma*(w*_m^T x) / sqrt(M) with sum v_m^2 <= 1, plus Gaussian noise
/// clipped at +-y0.
struct SyntheticTruth {
  TargetActivation sigma_star = TargetActivation::Gauss;
  Matrix W_star; // d x M planted features
  Vector v;      // M mixture coefficients
  double noise_var = 0.0;
  double clip_y0 = 0.0;

  Index dim() const { return W_star.rows(); }
  Index mixture_size() const { return W_star.cols(); }
  Vector f_star(const Matrix& X) const;
  double sup_f_bound() const; // sum |v_m| sup|sigma*| / sqrt(M)

  std::string to_json() const;
  static SyntheticTruth from_json(const std::string& text);
};

/// Planted features from N(0, I_d); v normalized to sum v^2 = v_norm^2
/// (<= 1). y0 defaults to 6 sigma + sup|f*|.
SyntheticTruth make_truth(TargetActivation sigma_star, int d, int M,
                          double noise_var, std::uint64_t seed,
                          double v_norm = 1.0);

Dataset synth_target(const SyntheticTruth& truth, int n, std::uint64_t seed);

/// Design with (1/n) X X^T carrying the planted eigenvalue profile,
/// realized by orthonormal columns scaled by sqrt(n ev_m). y is a noisy
/// linear readout of the planted directions.
struct PlantedDataset {
  Dataset data;
  Matrix gram;    // (1/n) X X^T
  Vector profile; // planted eigenvalues
};

PlantedDataset synth_spectrum(const SpectrumRegime& regime, int n,
                              std::uint64_t seed, int rank = 0);

} // namespace rflaf
