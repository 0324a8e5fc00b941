#include <gtest/gtest.h>

#include <sstream>

#include "bsgd/nn.hpp"
#include "problem_fd.hpp"

using namespace bsgd;

namespace {

// Straightforward per-sample evaluation against the documented flat layout.
double reference_forward(const std::vector<int>& dims, const Vector& w, double x0) {
  std::vector<double> act = {x0};
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int n_in = dims[l], n_out = dims[l + 1];
    std::vector<double> next(static_cast<std::size_t>(n_out), 0.0);
    for (int o = 0; o < n_out; ++o) {
      double z = 0.0;
      for (int i = 0; i < n_in; ++i) z += w[static_cast<Eigen::Index>(offset) + o * n_in + i] * act[static_cast<std::size_t>(i)];
      next[static_cast<std::size_t>(o)] = z;
    }
    offset += static_cast<std::size_t>(n_in * n_out);
    for (int o = 0; o < n_out; ++o) {
      next[static_cast<std::size_t>(o)] += w[static_cast<Eigen::Index>(offset) + o];
      if (l + 2 < dims.size()) next[static_cast<std::size_t>(o)] = std::max(0.0, next[static_cast<std::size_t>(o)]);
    }
    offset += static_cast<std::size_t>(n_out);
    act = next;
  }
  return act[0];
}

using testutil::random_batch;
using testutil::region_of;

}  // namespace

TEST(MlpShape, ParameterCount) {
  const MlpShape s({1, 40, 40, 1});
  EXPECT_EQ(s.num_params(), 2 * 40 + 41 * 40 + 41);
  EXPECT_EQ(s.weight_offset(0), 0);
  EXPECT_EQ(s.bias_offset(0), 40);
  EXPECT_EQ(s.weight_offset(1), 80);
  EXPECT_THROW(MlpShape({3}), InvalidArgument);
}

TEST(MlpForward, ZeroWeights) {
  const Mlp net = Mlp::zeros({2, 5, 1});
  Engine rng(1);
  const Batch b = random_batch(4, 2, 1, rng);
  EXPECT_EQ(mlp_forward(net, b.inputs), Matrix::Zero(4, 1));
}

TEST(MlpForward, SingleLinearLayer) {
  Mlp net = Mlp::zeros({1, 1});
  net.weights << 1.5, -0.25;
  EXPECT_DOUBLE_EQ(mlp_forward(net, Matrix::Constant(1, 1, 2.0))(0, 0), 1.5 * 2.0 - 0.25);
}

TEST(MlpForward, MatchesReferenceEvaluation) {
  Engine rng(2);
  const std::vector<int> dims = {1, 7, 5, 1};
  for (int rep = 0; rep < 10; ++rep) {
    Mlp net = Mlp::glorot(dims, rng);
    net.weights += testutil::random_vector(net.weights.size(), rng, 0.1);
    Matrix x(6, 1);
    for (int i = 0; i < 6; ++i) x(i, 0) = -3.0 + i * 1.1;
    const Matrix out = mlp_forward(net, x);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(out(i, 0), reference_forward(dims, net.weights, x(i, 0)), 1e-13);
  }
}

TEST(MlpForward, ShapeMismatch) {
  const Mlp net = Mlp::zeros({2, 3, 1});
  EXPECT_THROW(mlp_forward(net, Matrix::Zero(4, 3)), InvalidArgument);
  EXPECT_THROW(mlp_forward(net.shape, Vector::Zero(3), Matrix::Zero(4, 2)), InvalidArgument);
}

TEST(Glorot, RangeAndDeterminism) {
  Engine a(5), b(5);
  const Mlp n1 = Mlp::glorot({1, 40, 40, 1}, a);
  const Mlp n2 = Mlp::glorot({1, 40, 40, 1}, b);
  EXPECT_EQ(n1.weights, n2.weights);
  const double lim = std::sqrt(6.0 / 80.0);
  for (int i = 80; i < 80 + 1600; ++i) EXPECT_LE(std::abs(n1.weights[i]), lim);
  for (int i = 40; i < 80; ++i) EXPECT_EQ(n1.weights[i], 0.0);
}

TEST(MlpLossGrad, PerfectFit) {
  Mlp net = Mlp::zeros({1, 1});
  net.weights << 2.0, 1.0;
  Batch b;
  b.inputs = (Matrix(3, 1) << -1.0, 0.0, 2.0).finished();
  b.targets = (Matrix(3, 1) << -1.0, 1.0, 5.0).finished();
  const auto lg = mlp_loss_grad(net, b);
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_EQ(lg.grad, Vector::Zero(2));
}

TEST(MlpLossGrad, LinearHandChainRule) {
  Mlp net = Mlp::zeros({1, 1});
  const double w = 0.7, bias = -0.2, x = 1.3, y = 0.4;
  net.weights << w, bias;
  Batch b{Matrix::Constant(1, 1, x), Matrix::Constant(1, 1, y)};
  const auto lg = mlp_loss_grad(net, b);
  const double r = w * x + bias - y;
  EXPECT_NEAR(lg.loss, r * r, 1e-15);
  EXPECT_NEAR(lg.grad[0], 2.0 * r * x, 1e-15);
  EXPECT_NEAR(lg.grad[1], 2.0 * r, 1e-15);
}

TEST(MlpLossGrad, FiniteDifferencesOnRandomNets) {
  Engine rng(7);
  const std::vector<std::vector<int>> shapes = {{1, 8, 8, 1}, {2, 6, 3}, {3, 5, 4, 2}, {1, 40, 40, 1}};
  int pairs = 0;
  for (int rep = 0; rep < 24; ++rep) {
    const auto& dims = shapes[static_cast<std::size_t>(rep) % shapes.size()];
    Mlp net = Mlp::glorot(dims, rng);
    net.weights += testutil::random_vector(net.weights.size(), rng, 0.05);
    const Batch b = random_batch(5, dims.front(), dims.back(), rng);
    const auto fn = [&](const Vector& w) { return mlp_loss(net.shape, w, b); };
    const Vector fd = testutil::central_gradient(fn, net.weights, 1e-6, region_of(net.shape, b.inputs));
    EXPECT_LT(testutil::relative_error(mlp_loss_grad(net, b).grad, fd), 1e-5) << "rep " << rep;
    ++pairs;
  }
  EXPECT_GE(pairs, 20);
}

TEST(MlpLossGrad, TargetScaling) {
  Engine rng(8);
  const std::vector<int> dims = {1, 6, 1};
  Mlp net = Mlp::zeros(dims);
  Batch b = random_batch(5, 1, 1, rng);
  // Zero network: residual is -y, so scaling targets by c scales loss by c^2, grad by c.
  const auto base = mlp_loss_grad(net, b);
  b.targets *= 3.0;
  const auto scaled = mlp_loss_grad(net, b);
  EXPECT_DOUBLE_EQ(scaled.loss, 9.0 * base.loss);
  EXPECT_TRUE(scaled.grad.isApprox(3.0 * base.grad, 1e-15));
}

TEST(MlpHvp, LinearModelHessian) {
  // l(w) = (w.x + b - y)^2 for a [3, 1] net: Hessian = 2 [x; 1][x; 1]^T.
  Mlp net = Mlp::zeros({3, 1});
  net.weights << 0.1, -0.4, 0.3, 0.2;
  Batch b{(Matrix(1, 3) << 1.0, 2.0, -0.5).finished(), Matrix::Constant(1, 1, 0.7)};
  Vector xt(4);
  xt << 1.0, 2.0, -0.5, 1.0;
  const Vector v = (Vector(4) << 0.3, -1.0, 2.0, 0.5).finished();
  EXPECT_TRUE(mlp_hvp(net, b, v).isApprox(2.0 * xt * xt.dot(v), 1e-14));
  EXPECT_EQ(mlp_hvp(net, b, Vector::Zero(4)), Vector::Zero(4));
}

TEST(MlpHvp, FiniteDifferenceOfGradient) {
  Engine rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    Mlp net = Mlp::glorot({1, 10, 10, 1}, rng);
    const Batch b = random_batch(6, 1, 1, rng);
    const Vector v = testutil::random_vector(net.weights.size(), rng);
    double eps = 1e-4 * (1.0 + net.weights.norm()) / (1.0 + v.norm());
    const auto base = activation_signature(net.shape, net.weights, b.inputs);
    while (activation_signature(net.shape, net.weights + eps * v, b.inputs) != base ||
           activation_signature(net.shape, net.weights - eps * v, b.inputs) != base) {
      eps *= 0.5;
    }
    const Vector fd = (mlp_loss_grad(net.shape, net.weights + eps * v, b).grad -
                       mlp_loss_grad(net.shape, net.weights - eps * v, b).grad) / (2.0 * eps);
    EXPECT_LT(testutil::relative_error(mlp_hvp(net, b, v), fd), 1e-3);
  }
}

TEST(MlpHvp, SymmetryAndLinearity) {
  Engine rng(10);
  for (int rep = 0; rep < 20; ++rep) {
    Mlp net = Mlp::glorot({2, 9, 7, 1}, rng);
    const Batch b = random_batch(5, 2, 1, rng);
    const Vector u = testutil::random_vector(net.weights.size(), rng);
    const Vector v = testutil::random_vector(net.weights.size(), rng);
    const Vector Hu = mlp_hvp(net, b, u), Hv = mlp_hvp(net, b, v);
    const double lhs = v.dot(Hu), rhs = u.dot(Hv);
    EXPECT_LE(std::abs(lhs - rhs), 1e-8 * std::max({1.0, std::abs(lhs), std::abs(rhs)}));
    const double a = 0.7, c = -1.3;
    const Vector combo = mlp_hvp(net, b, a * u + c * v);
    EXPECT_LE((combo - (a * Hu + c * Hv)).norm(), 1e-10 * std::max(1.0, combo.norm()));
  }
}

TEST(MlpOutputVjp, MatchesFiniteDifferences) {
  Engine rng(11);
  const Mlp net = Mlp::glorot({1, 6, 4, 2}, rng);
  const Batch b = random_batch(3, 1, 2, rng);
  const Matrix up = b.targets;  // any upstream
  const auto fn = [&](const Vector& w) { return (mlp_forward(net.shape, w, b.inputs).array() * up.array()).sum(); };
  const Vector fd = testutil::central_gradient(fn, net.weights, 1e-6, region_of(net.shape, b.inputs));
  EXPECT_LT(testutil::relative_error(mlp_output_vjp(net.shape, net.weights, b.inputs, up), fd), 1e-7);
}

TEST(FdGradientCheck, Examples) {
  const Vector x = (Vector(3) << 0.5, -1.2, 2.0).finished();
  const double sq = fd_gradient_check([](const Vector& z) { return z.squaredNorm(); },
                                      [](const Vector& z) { return Vector(2.0 * z); }, x, 1e-5);
  EXPECT_LT(sq, 1e-8);
  const double l1 = fd_gradient_check(
      [](const Vector& z) { return z.lpNorm<1>(); },
      [](const Vector& z) { return Vector(z.array().sign().matrix()); }, x, 1e-5);
  EXPECT_LT(l1, 1e-6);
  Engine rng(12);
  const Mlp net = Mlp::glorot({1, 8, 1}, rng);
  const Batch b = random_batch(1, 1, 1, rng);
  const double e = fd_gradient_check([&](const Vector& w) { return mlp_loss(net.shape, w, b); },
                                     [&](const Vector& w) { return mlp_loss_grad(net.shape, w, b).grad; },
                                     net.weights, 1e-6);
  EXPECT_LT(e, 1e-5);
}

TEST(FdGradientCheck, RandomDirectionsAboveCap) {
  const Vector x = Vector::LinSpaced(50, -1.0, 1.0);
  const double e = fd_gradient_check([](const Vector& z) { return z.squaredNorm(); },
                                     [](const Vector& z) { return Vector(2.0 * z); }, x, 1e-5, 10);
  EXPECT_LT(e, 1e-8);
  const double wrong = fd_gradient_check([](const Vector& z) { return z.squaredNorm(); },
                                         [](const Vector& z) { return Vector(3.0 * z); }, x, 1e-5, 10);
  EXPECT_GT(wrong, 1e-2);
}

TEST(Weights, SaveLoadRoundTrip) {
  Engine rng(13);
  const Mlp net = Mlp::glorot({1, 40, 40, 1}, rng);
  std::stringstream ss;
  save_weights(ss, net);
  const Mlp back = load_weights(ss);
  EXPECT_EQ(back.shape.dims(), net.shape.dims());
  EXPECT_EQ(back.weights, net.weights);
}

TEST(Weights, LoadRejectsGarbage) {
  std::stringstream bad("mlp 3 1 4 1\n0.5\n");
  EXPECT_THROW(load_weights(bad), InvalidArgument);
  std::stringstream header("net 2 1 1\n");
  EXPECT_THROW(load_weights(header), InvalidArgument);
}
