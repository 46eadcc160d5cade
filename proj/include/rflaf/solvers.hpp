#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rflaf/basis.hpp"
#include "rflaf/types.hpp"

namespace rflaf {

enum class LossKind { Mse, CrossEntropy };

enum class JointObjective { MainEq5, SensingEq8 };

/// Inner ridge problem min_v (1/n)|Z v - y|^2 + lambda s |v|^2.
struct RidgeProblem {
  Eigen::Ref<const Matrix> Z; // n x s
  Eigen::Ref<const Matrix> y; // n x m targets
  double lambda = 0.0;
};

/// Closed form v = (Z^T Z + lambda n s I)^-1 Z^T y through the s x s system.
Matrix ridge_solve(const RidgeProblem& prob);

/// Same solution through the n x n system v = (1/s) Z^T (K + n lambda I)^-1 y
/// with K = (1/s) Z Z^T; preferable when n < s.
Matrix ridge_solve_dual(const RidgeProblem& prob);

struct SgdConfig {
  double learning_rate = 1e-3;
  int epochs = 50;
  int batch_size = 128;
  std::uint64_t seed = 0;
  double projection_radius = 0.0; // R; <= 0 derives 1/(h sqrt(N))
  double lambda0 = 0.0;           // balancing penalty weight
  double ridge_lambda = 0.0;      // lambda of the v-ridge term; <= 0 derives 1/sqrt(n)
  bool warm_start_v = true;       // v from the inner closed form at the initial a
  bool refresh_v_each_epoch = false;
  std::optional<Vector> init_a;   // overrides the random initialization
};

struct SgdTracePoint {
  int epoch = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
};

struct SgdResult {
  Vector a;
  Vector v;
  std::vector<SgdTracePoint> trace; // full-batch values at epoch boundaries
  double projection_radius = 0.0;
  double ridge_lambda = 0.0;
};

/// Precomputed basis responses for one (data, features) pairing. Evaluation
/// of the bilinear objective and its gradients is then a handful of GEMVs.
class JointProblem {
 public:
  JointProblem(const Matrix& X, const Vector& y, const Matrix& W,
               const Vector& q_diag, const BasisConfig& basis);

  Index n() const { return n_; }
  Index s() const { return s_; }
  int grid() const { return N_; }
  const Vector& targets() const { return y_; }
  const BasisConfig& basis() const { return basis_; }

  /// Z(a) = sigma_a(X W) diag(q).
  Matrix z_matrix(const Vector& a) const;

  struct Eval {
    double objective = 0.0;
    Vector grad_a, grad_v;
  };

  /// Full-batch objective and gradients.
  Eval eval(JointObjective obj, LossKind loss, const Vector& a, const Vector& v,
            double ridge_lambda, double lambda0) const;

  /// Same over a row subset; the data-fit term averages over the batch while
  /// penalty terms stay global.
  Eval eval_batch(JointObjective obj, LossKind loss, const Vector& a,
                  const Vector& v, double ridge_lambda, double lambda0,
                  const std::vector<int>& rows) const;

 private:
  Index n_ = 0, s_ = 0;
  int N_ = 0;
  Matrix tb_;    // N x (s * n); column i*s+j holds the basis values of w_j^T x_i
  Vector qd_;    // s weights
  Vector y_;
  BasisConfig basis_;
};

/// Projected SGD on the bilinear objective. MainEq5 minimizes the data fit
/// plus lambda s |v|^2 with a euclid-projected onto |a| <= R after every
/// step; SensingEq8 swaps the ridge for the balancing penalty
/// lambda0 (|a|^2 - |v|^2)^2 and leaves a unconstrained.
SgdResult sgd_joint(JointObjective obj, const Matrix& X, const Vector& y,
                    const Matrix& W, const Vector& q_diag,
                    const BasisConfig& basis, const SgdConfig& cfg,
                    LossKind loss = LossKind::Mse);

/// Mean loss of predictions against labels. Mse takes one column;
/// CrossEntropy takes one column of binary logits (labels 0/1) or a logits
/// matrix with integer class labels.
double loss_eval(LossKind kind, const Matrix& predictions, const Vector& labels);

void save_trace_csv(const std::vector<SgdTracePoint>& trace, const std::string& path);

} // namespace rflaf
