#include <doctest.h>

#include <cmath>
#include <random>

#include "rflaf/errors.hpp"
#include "rflaf/solvers.hpp"

using namespace rflaf;

namespace {

Matrix randn(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = gauss(rng);
  return m;
}

} // namespace

TEST_CASE("ridge solve scalar oracle") {
  Matrix Z(2, 1);
  Z << 1.0, 1.0;
  Vector y(2);
  y << 1.0, 1.0;
  // v = Z^T y / (Z^T Z + lambda n s) = 2 / (2 + 0.5 * 2 * 1)
  const Matrix v = ridge_solve({Z, y, 0.5});
  CHECK(v(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  const Matrix vd = ridge_solve_dual({Z, y, 0.5});
  CHECK(vd(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("ridge solve edge cases") {
  std::mt19937_64 rng(2);
  const Matrix Z = randn(rng, 6, 4);
  const Vector zero = Vector::Zero(6);
  CHECK(ridge_solve({Z, zero, 0.3}).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ridge_solve_dual({Z, zero, 0.3}).cwiseAbs().maxCoeff() == 0.0);

  const Vector y = randn(rng, 6, 1);
  const double lambda = 1e12 * Z.squaredNorm() / (6.0 * 4.0);
  const Matrix v = ridge_solve({Z, y, lambda});
  CHECK(v.norm() <= 1e-6 * y.norm() / Z.norm());

  CHECK_THROWS_AS(ridge_solve({Z, y, 0.0}), std::invalid_argument);
}

TEST_CASE("primal and dual ridge agree") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> dim(2, 32);
  std::uniform_real_distribution<double> lam(1e-4, 1.0);
  for (int k = 0; k < 30; ++k) {
    const Index n = dim(rng), s = dim(rng);
    const Matrix Z = randn(rng, n, s);
    const Vector y = randn(rng, n, 1);
    const double lambda = lam(rng);
    const Matrix vp = ridge_solve({Z, y, lambda});
    const Matrix vd = ridge_solve_dual({Z, y, lambda});
    CHECK((vp - vd).norm() <= 1e-8 * std::max(1e-30, vp.norm()));
  }
  // wide case from the operation contract
  const Matrix Z = randn(rng, 10, 40);
  const Vector y = randn(rng, 10, 1);
  const Matrix vp = ridge_solve({Z, y, 0.05});
  const Matrix vd = ridge_solve_dual({Z, y, 0.05});
  CHECK((vp - vd).norm() <= 1e-8 * vp.norm());
}

TEST_CASE("ridge solution satisfies its first-order condition") {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 20; ++k) {
    const Index n = 5 + k, s = 3 + (k % 7);
    const Matrix Z = randn(rng, n, s);
    const Vector y = randn(rng, n, 1);
    const double lambda = 0.01 + 0.05 * k;
    const Matrix v = ridge_solve({Z, y, lambda});
    const Vector residual = Z.transpose() * (Z * v) +
                            lambda * double(n) * double(s) * v.col(0) -
                            Z.transpose() * y;
    CHECK(residual.norm() <= 1e-8 * (Z.transpose() * y).norm());
  }
}

TEST_CASE("ridge supports multiple targets") {
  std::mt19937_64 rng(8);
  const Matrix Z = randn(rng, 12, 5);
  const Matrix Y = randn(rng, 12, 3);
  const Matrix V = ridge_solve({Z, Y, 0.2});
  CHECK(V.cols() == 3);
  for (int c = 0; c < 3; ++c) {
    const Matrix vc = ridge_solve({Z, Y.col(c), 0.2});
    CHECK((V.col(c) - vc.col(0)).norm() <= 1e-12);
  }
}

TEST_CASE("objective at zero outer weights is the label energy") {
  std::mt19937_64 rng(10);
  const Matrix X = randn(rng, 9, 2);
  const Vector y = randn(rng, 9, 1);
  const Matrix W = randn(rng, 2, 4);
  const BasisConfig basis = BasisConfig::make(BasisKind::Rbf, -3.0, 3.0, 5);
  const JointProblem prob(X, y, W, Vector(), basis);
  const Vector v0 = Vector::Zero(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector a = randn(rng, 5, 1);
    const auto e = prob.eval(JointObjective::MainEq5, LossKind::Mse, a, v0, 0.1, 0.0);
    CHECK(e.objective == doctest::Approx(y.squaredNorm() / 9.0).epsilon(1e-12));
    CHECK(e.grad_a.cwiseAbs().maxCoeff() == 0.0); // predictions are zero
  }
}

TEST_CASE("balancing penalty vanishes on the balanced manifold") {
  std::mt19937_64 rng(12);
  const Matrix X = randn(rng, 7, 2);
  const Vector y = randn(rng, 7, 1);
  const Matrix W = randn(rng, 2, 3);
  const BasisConfig basis = BasisConfig::make(BasisKind::Rbf, -3.0, 3.0, 3);
  const JointProblem prob(X, y, W, Vector(), basis);
  Vector a = randn(rng, 3, 1);
  Vector v = randn(rng, 3, 1);
  v *= a.norm() / v.norm(); // |a| = |v|
  const auto with = prob.eval(JointObjective::SensingEq8, LossKind::Mse, a, v, 0.0, 7.5);
  const auto without = prob.eval(JointObjective::SensingEq8, LossKind::Mse, a, v, 0.0, 0.0);
  CHECK(with.objective == doctest::Approx(without.objective).epsilon(1e-12));
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(14);
  const Matrix X = randn(rng, 8, 2);
  Vector y = randn(rng, 8, 1);
  const Matrix W = randn(rng, 2, 3);
  const BasisConfig basis = BasisConfig::make(BasisKind::Rbf, -3.0, 3.0, 4);
  Vector qd(3);
  qd << 1.0, 0.7, 1.4;
  const JointProblem prob(X, y, W, qd, basis);

  // binary labels for the cross-entropy case
  Vector ybin(8);
  for (int i = 0; i < 8; ++i) ybin[i] = i % 2;
  const JointProblem prob_ce(X, ybin, W, qd, basis);

  const double h = 1e-5;
  auto check_point = [&](const JointProblem& p, JointObjective obj, LossKind loss) {
    const Vector a = randn(rng, 4, 1);
    const Vector v = randn(rng, 3, 1);
    const auto e = p.eval(obj, loss, a, v, 0.07, 0.2);
    Vector fd(7);
    for (int k = 0; k < 4; ++k) {
      Vector ap = a, am = a;
      ap[k] += h;
      am[k] -= h;
      fd[k] = (p.eval(obj, loss, ap, v, 0.07, 0.2).objective -
               p.eval(obj, loss, am, v, 0.07, 0.2).objective) /
              (2 * h);
    }
    for (int j = 0; j < 3; ++j) {
      Vector vp = v, vm = v;
      vp[j] += h;
      vm[j] -= h;
      fd[4 + j] = (p.eval(obj, loss, a, vp, 0.07, 0.2).objective -
                   p.eval(obj, loss, a, vm, 0.07, 0.2).objective) /
                  (2 * h);
    }
    Vector analytic(7);
    analytic << e.grad_a, e.grad_v;
    CHECK((analytic - fd).norm() <= 1e-4 * std::max(1.0, fd.norm()));
  };

  for (int trial = 0; trial < 3; ++trial) {
    check_point(prob, JointObjective::MainEq5, LossKind::Mse);
    check_point(prob, JointObjective::SensingEq8, LossKind::Mse);
    check_point(prob_ce, JointObjective::MainEq5, LossKind::CrossEntropy);
  }
}

TEST_CASE("sgd respects the projection radius") {
  std::mt19937_64 rng(16);
  const Matrix X = randn(rng, 30, 2);
  const Vector y = randn(rng, 30, 1);
  const Matrix W = randn(rng, 2, 5);
  const BasisConfig basis = BasisConfig::make(BasisKind::Rbf, -3.0, 3.0, 6);

  SgdConfig cfg;
  cfg.learning_rate = 0.05; // large steps to stress the projection
  cfg.batch_size = 8;
  cfg.projection_radius = 0.2;
  cfg.seed = 5;
  for (const int epochs : {1, 2, 3, 7}) {
    cfg.epochs = epochs;
    const SgdResult res =
        sgd_joint(JointObjective::MainEq5, X, y, W, Vector(), basis, cfg);
    CHECK(res.a.norm() <= 0.2 + 1e-12);
    CHECK(res.trace.size() == static_cast<size_t>(epochs + 1));
  }
}

TEST_CASE("closed form dominates the sgd inner solution") {
  std::mt19937_64 rng(18);
  const Matrix X = randn(rng, 60, 3);
  const Matrix W = randn(rng, 3, 8);
  const BasisConfig basis = BasisConfig::make(BasisKind::Rbf, -4.0, 4.0, 6);

  // target generated by the model class itself so the fit is meaningful
  Vector a_true = randn(rng, 6, 1);
  a_true.normalize();
  Vector v_true = randn(rng, 8, 1);
  const JointProblem gen(X, Vector::Zero(60), W, Vector(), basis);
  const Vector y = gen.z_matrix(a_true) * v_true;

  SgdConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 15;
  cfg.ridge_lambda = 0.02;
  cfg.seed = 9;
  const SgdResult res =
      sgd_joint(JointObjective::MainEq5, X, y, W, Vector(), basis, cfg);

  const JointProblem prob(X, y, W, Vector(), basis);
  const Matrix Z = prob.z_matrix(res.a);
  const Vector v_star = ridge_solve({Z, y, 0.02});
  const double at_sgd =
      prob.eval(JointObjective::MainEq5, LossKind::Mse, res.a, res.v, 0.02, 0.0)
          .objective;
  const double at_closed =
      prob.eval(JointObjective::MainEq5, LossKind::Mse, res.a, v_star, 0.02, 0.0)
          .objective;
  CHECK(at_sgd >= at_closed - 1e-12);
  CHECK(at_sgd <= 1.05 * at_closed);
}

TEST_CASE("full-batch descent with refreshed inner solve is monotone") {
  std::mt19937_64 rng(20);
  const Matrix X = randn(rng, 40, 2);
  const Vector y = randn(rng, 40, 1);
  const Matrix W = randn(rng, 2, 6);
  const BasisConfig basis = BasisConfig::make(BasisKind::Rbf, -3.0, 3.0, 5);

  SgdConfig cfg;
  cfg.epochs = 25;
  cfg.batch_size = 40; // full batch
  cfg.refresh_v_each_epoch = true;
  cfg.ridge_lambda = 0.05;
  cfg.seed = 2;
  const SgdResult res =
      sgd_joint(JointObjective::MainEq5, X, y, W, Vector(), basis, cfg);
  for (size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].objective <= res.trace[i - 1].objective + 1e-10);
}

TEST_CASE("divergent learning rates are detected") {
  std::mt19937_64 rng(22);
  const Matrix X = randn(rng, 20, 2);
  const Vector y = 100.0 * randn(rng, 20, 1);
  const Matrix W = randn(rng, 2, 4);
  const BasisConfig basis = BasisConfig::make(BasisKind::Rbf, -3.0, 3.0, 4);

  SgdConfig cfg;
  cfg.learning_rate = 1e9;
  cfg.epochs = 50;
  cfg.batch_size = 5;
  cfg.warm_start_v = false;
  CHECK_THROWS_AS(
      sgd_joint(JointObjective::SensingEq8, X, y, W, Vector(), basis, cfg, LossKind::Mse),
      DivergenceError);
}

TEST_CASE("loss evaluation") {
  Vector labels(2);
  labels << 0.0, 2.0;
  Matrix pred(2, 1);
  pred << 0.0, 2.0;
  CHECK(loss_eval(LossKind::Mse, pred, labels) == 0.0);

  Matrix off(1, 1);
  off << 0.0;
  Vector two(1);
  two << 2.0;
  CHECK(loss_eval(LossKind::Mse, off, two) == doctest::Approx(4.0));

  Vector binary(2);
  binary << 0.0, 1.0;
  Matrix logits = Matrix::Zero(2, 1);
  CHECK(loss_eval(LossKind::CrossEntropy, logits, binary) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // softmax path with integer class labels
  Matrix multi(2, 3);
  multi << 1.0, 0.0, -1.0, 0.0, 2.0, 0.0;
  Vector cls(2);
  cls << 0.0, 1.0;
  double expected = 0.0;
  for (int i = 0; i < 2; ++i) {
    double lse = 0.0;
    for (int c = 0; c < 3; ++c) lse += std::exp(multi(i, c));
    expected += std::log(lse) - multi(i, static_cast<int>(cls[i]));
  }
  CHECK(loss_eval(LossKind::CrossEntropy, multi, cls) ==
        doctest::Approx(expected / 2.0).epsilon(1e-12));

  Vector bad(2);
  bad << 0.0, 3.0;
  CHECK_THROWS_AS(loss_eval(LossKind::CrossEntropy, multi, bad),
                  std::invalid_argument);
  Vector notbin(2);
  notbin << 0.0, 0.5;
  CHECK_THROWS_AS(loss_eval(LossKind::CrossEntropy, logits, notbin),
                  std::invalid_argument);
}
