#include "rflaf/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "rflaf/errors.hpp"
#include "rflaf/rng.hpp"

namespace rflaf {

namespace {

// Per-sample loss and its derivative in the prediction. CrossEntropy expects
// a binary logit against labels in {0,1} and is 1-Lipschitz in the logit.
inline double loss_value(LossKind kind, double pred, double label) {
  if (kind == LossKind::Mse) {
    const double r = pred - label;
    return r * r;
  }
  const double margin = (2.0 * label - 1.0) * pred;
  // softplus(-margin), stabilized
  return std::max(-margin, 0.0) + std::log1p(std::exp(-std::abs(margin)));
}

inline double loss_derivative(LossKind kind, double pred, double label) {
  if (kind == LossKind::Mse) return 2.0 * (pred - label);
  const double ybar = 2.0 * label - 1.0;
  const double margin = ybar * pred;
  return -ybar / (1.0 + std::exp(margin));
}

void check_binary_labels(const Vector& labels) {
  for (Index i = 0; i < labels.size(); ++i)
    if (labels[i] != 0.0 && labels[i] != 1.0)
      throw std::invalid_argument("cross-entropy: binary labels must be 0 or 1");
}

} // namespace

Matrix ridge_solve(const RidgeProblem& prob) {
  if (!(prob.lambda > 0.0))
    throw std::invalid_argument("ridge_solve: lambda must be positive");
  if (prob.Z.rows() != prob.y.rows())
    throw std::invalid_argument("ridge_solve: Z and y row counts differ");
  const Index n = prob.Z.rows(), s = prob.Z.cols();
  Matrix normal = prob.Z.transpose() * prob.Z;
  normal.diagonal().array() += prob.lambda * static_cast<double>(n) * static_cast<double>(s);
  Eigen::LLT<Matrix> llt(normal);
  if (llt.info() != Eigen::Success)
    throw NumericError("ridge_solve: Cholesky factorization failed");
  return llt.solve(prob.Z.transpose() * prob.y);
}

Matrix ridge_solve_dual(const RidgeProblem& prob) {
  if (!(prob.lambda > 0.0))
    throw std::invalid_argument("ridge_solve_dual: lambda must be positive");
  if (prob.Z.rows() != prob.y.rows())
    throw std::invalid_argument("ridge_solve_dual: Z and y row counts differ");
  const Index n = prob.Z.rows(), s = prob.Z.cols();
  Matrix K = (prob.Z * prob.Z.transpose()) / static_cast<double>(s);
  K.diagonal().array() += static_cast<double>(n) * prob.lambda;
  Eigen::LLT<Matrix> llt(K);
  if (llt.info() != Eigen::Success)
    throw NumericError("ridge_solve_dual: Cholesky factorization failed");
  return prob.Z.transpose() * llt.solve(prob.y) / static_cast<double>(s);
}

JointProblem::JointProblem(const Matrix& X, const Vector& y, const Matrix& W,
                           const Vector& q_diag, const BasisConfig& basis)
    : basis_(basis) {
  basis_.validate();
  if (X.cols() != W.rows())
    throw std::invalid_argument("JointProblem: X columns must match W rows");
  if (X.rows() != y.size())
    throw std::invalid_argument("JointProblem: X and y row counts differ");
  n_ = X.rows();
  s_ = W.cols();
  N_ = basis_.grid_size();
  if (q_diag.size() == 0)
    qd_ = Vector::Ones(s_);
  else if (q_diag.size() == s_)
    qd_ = q_diag;
  else
    throw std::invalid_argument("JointProblem: weight diagonal length mismatch");
  y_ = y;

  const Matrix proj = X * W;
  if (!proj.allFinite())
    throw NumericError("JointProblem: non-finite feature projections");
  tb_.resize(N_, s_ * n_);
  for (Index i = 0; i < n_; ++i)
    for (Index j = 0; j < s_; ++j)
      eval_basis_into(basis_, proj(i, j), tb_.col(i * s_ + j).data());
}

Matrix JointProblem::z_matrix(const Vector& a) const {
  if (a.size() != N_)
    throw std::invalid_argument("z_matrix: coefficient length mismatch");
  Matrix Z(n_, s_);
  for (Index i = 0; i < n_; ++i)
    Z.row(i) = (a.transpose() * tb_.middleCols(i * s_, s_)).cwiseProduct(qd_.transpose());
  return Z;
}

JointProblem::Eval JointProblem::eval_batch(JointObjective obj, LossKind loss,
                                            const Vector& a, const Vector& v,
                                            double ridge_lambda, double lambda0,
                                            const std::vector<int>& rows) const {
  if (a.size() != N_ || v.size() != s_)
    throw std::invalid_argument("eval: parameter length mismatch");
  if (loss == LossKind::CrossEntropy) check_binary_labels(y_);
  const Vector u = qd_.cwiseProduct(v); // s
  const double inv_b = 1.0 / static_cast<double>(rows.size());

  Eval out;
  out.grad_a = Vector::Zero(N_);
  out.grad_v = Vector::Zero(s_);
  Vector phi(s_);
  for (const int i : rows) {
    auto block = tb_.middleCols(static_cast<Index>(i) * s_, s_); // N x s
    phi.noalias() = block.transpose() * a;                       // sigma_a row
    const double pred = phi.dot(u);
    out.objective += inv_b * loss_value(loss, pred, y_[i]);
    const double g = inv_b * loss_derivative(loss, pred, y_[i]);
    out.grad_a.noalias() += g * (block * u);
    out.grad_v.noalias() += g * phi.cwiseProduct(qd_);
  }

  if (obj == JointObjective::MainEq5) {
    const double ls = ridge_lambda * static_cast<double>(s_);
    out.objective += ls * v.squaredNorm();
    out.grad_v.noalias() += 2.0 * ls * v;
  } else {
    const double gap = a.squaredNorm() - v.squaredNorm();
    out.objective += lambda0 * gap * gap;
    out.grad_a.noalias() += 4.0 * lambda0 * gap * a;
    out.grad_v.noalias() -= 4.0 * lambda0 * gap * v;
  }
  return out;
}

JointProblem::Eval JointProblem::eval(JointObjective obj, LossKind loss,
                                      const Vector& a, const Vector& v,
                                      double ridge_lambda, double lambda0) const {
  std::vector<int> all(static_cast<size_t>(n_));
  std::iota(all.begin(), all.end(), 0);
  return eval_batch(obj, loss, a, v, ridge_lambda, lambda0, all);
}

SgdResult sgd_joint(JointObjective obj, const Matrix& X, const Vector& y,
                    const Matrix& W, const Vector& q_diag,
                    const BasisConfig& basis, const SgdConfig& cfg,
                    LossKind loss) {
  if (!(cfg.learning_rate > 0.0))
    throw std::invalid_argument("sgd_joint: learning rate must be positive");
  if (cfg.epochs < 0) throw std::invalid_argument("sgd_joint: negative epoch count");

  const JointProblem prob(X, y, W, q_diag, basis);
  const Index n = prob.n(), s = prob.s();
  const int N = prob.grid();
  const int batch = std::max(1, std::min<int>(cfg.batch_size, static_cast<int>(n)));
  const double R = cfg.projection_radius > 0.0 ? cfg.projection_radius
                                               : default_radius(basis);
  const double lambda = cfg.ridge_lambda > 0.0
                            ? cfg.ridge_lambda
                            : 1.0 / std::sqrt(static_cast<double>(n));
  const bool project = obj == JointObjective::MainEq5;

  auto rng = make_rng(cfg.seed);

  Vector a;
  if (cfg.init_a) {
    if (cfg.init_a->size() != N)
      throw std::invalid_argument("sgd_joint: init_a length mismatch");
    a = *cfg.init_a;
  } else {
    std::uniform_real_distribution<double> unif(-R / std::sqrt(double(N)),
                                                R / std::sqrt(double(N)));
    a.resize(N);
    for (int k = 0; k < N; ++k) a[k] = unif(rng);
  }
  if (project && a.norm() > R) a *= R / a.norm();

  Vector v = Vector::Zero(s);
  if (cfg.warm_start_v) {
    // Inner closed form at the initial a; also sensible for non-MSE losses
    // as a starting point.
    const Matrix Z = prob.z_matrix(a);
    v = ridge_solve({Z, y, lambda});
  }

  SgdResult res;
  res.projection_radius = R;
  res.ridge_lambda = lambda;

  auto record = [&](int epoch) {
    const auto e = prob.eval(obj, loss, a, v, lambda, cfg.lambda0);
    const double gnorm =
        std::sqrt(e.grad_a.squaredNorm() + e.grad_v.squaredNorm());
    res.trace.push_back({epoch, e.objective, gnorm});
    return e.objective;
  };
  const double initial = record(0);
  const double divergence_cap = 1e6 * std::max(initial, 1e-12);

  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> rows;
  rows.reserve(static_cast<size_t>(batch));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.refresh_v_each_epoch) {
      const Matrix Z = prob.z_matrix(a);
      v = ridge_solve({Z, y, lambda});
    }
    std::shuffle(perm.begin(), perm.end(), rng);
    const double ls = lambda * static_cast<double>(s);
    for (Index start = 0; start < n; start += batch) {
      const Index stop = std::min<Index>(start + batch, n);
      rows.assign(perm.begin() + start, perm.begin() + stop);
      const auto e = prob.eval_batch(obj, loss, a, v, lambda, cfg.lambda0, rows);
      a.noalias() -= cfg.learning_rate * e.grad_a;
      if (obj == JointObjective::MainEq5) {
        // Implicit (proximal) step in the quadratic ridge term, explicit in
        // the data term; stable for any lambda * s.
        const Vector data_grad = e.grad_v - 2.0 * ls * v;
        v = (v - cfg.learning_rate * data_grad) /
            (1.0 + 2.0 * cfg.learning_rate * ls);
      } else {
        v.noalias() -= cfg.learning_rate * e.grad_v;
      }
      if (project) {
        const double norm = a.norm();
        if (norm > R) a *= R / norm;
      }
    }
    const double objective = record(epoch);
    if (!std::isfinite(objective) || objective > divergence_cap)
      throw DivergenceError(
          "sgd_joint: objective exceeded 1e6 x initial at epoch " +
          std::to_string(epoch) + "; try a smaller learning rate");
  }

  res.a = std::move(a);
  res.v = std::move(v);
  return res;
}

double loss_eval(LossKind kind, const Matrix& predictions, const Vector& labels) {
  if (predictions.rows() != labels.size())
    throw std::invalid_argument("loss_eval: prediction/label row counts differ");
  const Index n = predictions.rows();
  if (n == 0) throw std::invalid_argument("loss_eval: empty inputs");

  if (kind == LossKind::Mse) {
    if (predictions.cols() != 1)
      throw std::invalid_argument("loss_eval: MSE expects one prediction column");
    return (predictions.col(0) - labels).squaredNorm() / static_cast<double>(n);
  }

  if (predictions.cols() == 1) {
    check_binary_labels(labels);
    double total = 0.0;
    for (Index i = 0; i < n; ++i)
      total += loss_value(LossKind::CrossEntropy, predictions(i, 0), labels[i]);
    return total / static_cast<double>(n);
  }

  // Softmax cross-entropy over logits, integer class labels.
  const Index classes = predictions.cols();
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double li = labels[i];
    const Index cls = static_cast<Index>(li);
    if (li != static_cast<double>(cls) || cls < 0 || cls >= classes)
      throw std::invalid_argument("loss_eval: class label out of range at row " +
                                  std::to_string(i));
    const double zmax = predictions.row(i).maxCoeff();
    const double lse =
        zmax + std::log((predictions.row(i).array() - zmax).exp().sum());
    total += lse - predictions(i, cls);
  }
  return total / static_cast<double>(n);
}

void save_trace_csv(const std::vector<SgdTracePoint>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_trace_csv: cannot open " + path);
  out.precision(17);
  out << "epoch,objective,grad_norm\n";
  for (const auto& p : trace)
    out << p.epoch << "," << p.objective << "," << p.grad_norm << "\n";
}

} // namespace rflaf
