#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bsgd/cso.hpp"
#include "bsgd/problems.hpp"
#include "fd.hpp"

using namespace bsgd;

namespace {

QuadraticProblem quad(double sigma, QuadraticKind kind, int d = 1) {
  QuadraticCsoSpec spec;
  spec.d = d;
  spec.sigma_inner = sigma;
  spec.kind = kind;
  return QuadraticProblem(spec);
}

InnerBatch batch_of(std::initializer_list<double> values) {
  InnerBatch b;
  b.samples.resize(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index j = 0;
  for (double v : values) b.samples(0, j++) = v;
  return b;
}

OuterSample shift(double y) { return OuterSample{Vector::Constant(1, y)}; }

}  // namespace

TEST(EstimateValue, NoiseCancelsForSquare) {
  const auto p = quad(1.0, QuadraticKind::kSmooth);
  EXPECT_DOUBLE_EQ(estimate_value(p, Vector::Constant(1, 1.0), shift(0.0), batch_of({0.5, -0.5})), 1.0);
}

TEST(EstimateValue, AbsoluteValue) {
  const auto p = quad(1.0, QuadraticKind::kNonsmooth);
  EXPECT_DOUBLE_EQ(estimate_value(p, Vector::Zero(1), shift(0.0), batch_of({2.0})), 2.0);
}

TEST(EstimateValue, LogisticMatchesDirectFormula) {
  InvariantLogisticSpec spec;
  spec.d = 3;
  spec.reference_size = 10;
  const InvariantLogisticProblem p(spec);
  Vector a(3);
  a << 0.3, -1.2, 0.7;
  const OuterSample xi = InvariantLogisticProblem::make_outer(a, 1.0);
  InnerBatch b;
  b.samples.resize(3, 2);
  b.samples << 1.0, 0.0, 2.0, -1.0, 0.5, 0.5;
  Vector x(3);
  x << 0.4, 0.1, -0.3;
  const Vector v = b.samples.rowwise().mean();
  EXPECT_NEAR(estimate_value(p, x, xi, b), std::log(1.0 + std::exp(-v.dot(x))), 1e-15);
}

TEST(EstimateValue, RejectsEmptyBatch) {
  const auto p = quad(1.0, QuadraticKind::kSmooth);
  InnerBatch empty;
  empty.samples.resize(1, 0);
  EXPECT_THROW(estimate_value(p, Vector::Zero(1), shift(0.0), empty), InvalidArgument);
}

namespace {

// f(u) = u^2 with g(x, eta) = x / eta: the inner mean blows up for eta = 0.
class ExplodingProblem final : public CsoProblem {
 public:
  std::string name() const override { return "exploding"; }
  int dim_x() const override { return 1; }
  int dim_inner() const override { return 1; }
  OuterSample sample_outer(Engine&) const override { return {Vector::Zero(1)}; }
  InnerBatch sample_inner(const OuterSample&, int m, Engine&) const override {
    return InnerBatch{Matrix::Zero(1, m)};
  }
  Vector g_value(const Vector& x, const OuterSample&, const Eigen::Ref<const Vector>& eta) const override {
    return x.array() / eta.array();
  }
  Vector g_jacobian_t(const Vector&, const OuterSample&, const Eigen::Ref<const Vector>& eta,
                      const Vector& v) const override {
    return v.array() / eta.array();
  }
  double f_value(const OuterSample&, const Vector& u) const override { return u.squaredNorm(); }
  Vector f_grad(const OuterSample&, const Vector& u) const override { return 2.0 * u; }
  Smoothness smoothness() const override { return Smoothness::kLipschitzSmooth; }
};

}  // namespace

TEST(EstimateValue, NonFiniteNamesComponent) {
  ExplodingProblem p;
  Engine rng(1);
  try {
    estimate_gradient(p, Vector::Ones(1), p.sample_outer(rng), InnerBatch{Matrix::Zero(1, 1)});
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("inner mean"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("component 0"), std::string::npos);
  }
}

TEST(EstimateGradient, SquareExample) {
  const auto p = quad(1.0, QuadraticKind::kSmooth);
  const Vector g = estimate_gradient(p, Vector::Constant(1, 1.0), shift(0.0), batch_of({0.5, -0.5}));
  EXPECT_DOUBLE_EQ(g[0], 2.0);
}

TEST(EstimateGradient, DeterministicInnerMapGivesPlainGradient) {
  const auto p = quad(0.0, QuadraticKind::kSmooth, 3);
  Engine rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    const Vector x = testutil::random_vector(3, rng);
    const OuterSample xi = shift(0.7);
    const InnerBatch b = p.sample_inner(xi, 4, rng);
    const Vector g = estimate_gradient(p, x, xi, b);
    EXPECT_TRUE(g.isApprox(2.0 * (x.array() - 0.7).matrix(), 1e-15));
  }
}

TEST(EstimateGradient, MatchesFiniteDifferencesOnQuadratic) {
  QuadraticCsoSpec spec;
  spec.d = 4;
  spec.sigma_inner = 0.7;
  spec.shift = ShiftLaw::normal(0.5, 1.0);
  const QuadraticProblem p(spec);
  Engine rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector x = testutil::random_vector(4, rng);
    const OuterSample xi = p.sample_outer(rng);
    const InnerBatch b = p.sample_inner(xi, 3, rng);
    const double h = 1e-5 * (1.0 + x.norm());
    const Vector fd = testutil::central_gradient(
        [&](const Vector& z) { return estimate_value(p, z, xi, b); }, x, h);
    EXPECT_LT(testutil::relative_error(estimate_gradient(p, x, xi, b), fd), 1e-4);
  }
}

TEST(EstimateBias, SmoothClosedForm) {
  const auto p = quad(1.0, QuadraticKind::kSmooth);
  RngStreams rng(5);
  const BiasEstimate est = estimate_bias(p, Vector::Zero(1), 4, 1000000, rng);
  EXPECT_EQ(est.m, 4);
  EXPECT_EQ(est.n_mc, 1000000);
  EXPECT_GT(est.std_err, 0.0);
  EXPECT_NEAR(est.mean_gap, 0.25, 3.0 * est.std_err);
}

TEST(EstimateBias, NonsmoothClosedForm) {
  const auto p = quad(1.0, QuadraticKind::kNonsmooth);
  RngStreams rng(6);
  const BiasEstimate est = estimate_bias(p, Vector::Zero(1), 4, 1000000, rng);
  EXPECT_NEAR(est.mean_gap, std::sqrt(2.0 / (std::numbers::pi * 4.0)), 3.0 * est.std_err);
}

TEST(EstimateBias, LargeBatchStaysNearPrediction) {
  for (auto kind : {QuadraticKind::kSmooth, QuadraticKind::kNonsmooth}) {
    const auto p = quad(1.0, kind);
    RngStreams rng(8);
    const BiasEstimate est = estimate_bias(p, Vector::Zero(1), 10000, 2000, rng);
    const double predicted = p.closed_form_bias(Vector::Zero(1), 10000);
    EXPECT_LT(std::abs(est.mean_gap), 10.0 * predicted);
  }
}

TEST(EstimateBias, DeterministicInnerMapIsUnbiased) {
  QuadraticCsoSpec spec;
  spec.sigma_inner = 0.0;
  spec.shift = ShiftLaw::normal(0.0, 1.0);
  const QuadraticProblem p(spec);
  RngStreams r1(9), r2(10);
  const auto b1 = estimate_bias(p, Vector::Constant(1, 0.3), 1, 200000, r1);
  const auto b100 = estimate_bias(p, Vector::Constant(1, 0.3), 100, 200000, r2);
  EXPECT_NEAR(b1.mean_gap, 0.0, 3.0 * b1.std_err);
  EXPECT_NEAR(b1.mean_gap - b100.mean_gap, 0.0, 3.0 * std::hypot(b1.std_err, b100.std_err));
}

TEST(EstimateBias, BoundsAndMonotonicity) {
  const auto smooth = quad(1.0, QuadraticKind::kSmooth);
  const auto nonsmooth = quad(1.0, QuadraticKind::kNonsmooth);
  double prev_s = 1e9, prev_n = 1e9, prev_se_s = 0, prev_se_n = 0;
  for (int m : {1, 4, 16, 64}) {
    RngStreams r1(100 + m), r2(200 + m);
    const auto s = estimate_bias(smooth, Vector::Zero(1), m, 100000, r1);
    const auto n = estimate_bias(nonsmooth, Vector::Zero(1), m, 100000, r2);
    // S sigma^2/(2m) with S = 2 on the squared instance; L_f sigma/sqrt(m) with L_f = 1.
    EXPECT_LE(s.mean_gap, 2.0 * 1.0 / (2.0 * m) + 3.0 * s.std_err);
    EXPECT_LE(n.mean_gap, 1.0 / std::sqrt(m) + 3.0 * n.std_err);
    EXPECT_LE(s.mean_gap, prev_s + 3.0 * std::hypot(s.std_err, prev_se_s));
    EXPECT_LE(n.mean_gap, prev_n + 3.0 * std::hypot(n.std_err, prev_se_n));
    prev_s = s.mean_gap;
    prev_n = n.mean_gap;
    prev_se_s = s.std_err;
    prev_se_n = n.std_err;
  }
}

TEST(EstimateBias, RequiresTrueObjective) {
  ExplodingProblem p;
  RngStreams rng(1);
  EXPECT_THROW(estimate_bias(p, Vector::Ones(1), 1, 10, rng), UnsupportedOperation);
}

TEST(FitLogLogSlope, ExactPowerLaws) {
  const auto a = fit_loglog_slope({{1, 1}, {4, 0.25}, {16, 0.0625}});
  EXPECT_NEAR(a.slope, -1.0, 1e-12);
  EXPECT_NEAR(a.r2, 1.0, 1e-12);
  const auto b = fit_loglog_slope({{1, 1}, {4, 0.5}, {16, 0.25}});
  EXPECT_NEAR(b.slope, -0.5, 1e-12);
}

TEST(FitLogLogSlope, Errors) {
  EXPECT_THROW(fit_loglog_slope({{1, 1}, {2, 0.5}}), InvalidArgument);
  EXPECT_THROW(fit_loglog_slope({{1, 1}, {2, 0.0}, {3, 1}}), InvalidArgument);
  EXPECT_THROW(fit_loglog_slope({{1, 1}, {1, 0.5}, {1, 2}}), InvalidArgument);
}

TEST(FitLogLogSlope, SmoothBiasSweep) {
  const auto p = quad(1.0, QuadraticKind::kSmooth);
  std::vector<std::pair<double, double>> pts;
  for (int m : {1, 4, 16, 64, 256}) {
    RngStreams rng(300 + m);
    pts.emplace_back(m, estimate_bias(p, Vector::Zero(1), m, 200000, rng).mean_gap);
  }
  const auto fit = fit_loglog_slope(pts);
  EXPECT_GE(fit.slope, -1.1);
  EXPECT_LE(fit.slope, -0.9);
}

TEST(BiasBound, SmoothAndLipschitzForms) {
  ProblemMeta meta;
  EXPECT_FALSE(bias_bound(meta, Smoothness::kLipschitzSmooth, 4).has_value());
  meta.sigma_g = 2.0;
  meta.S = 3.0;
  meta.L_f = 5.0;
  EXPECT_DOUBLE_EQ(*bias_bound(meta, Smoothness::kLipschitzSmooth, 4), 3.0 * 4.0 / 8.0);
  EXPECT_DOUBLE_EQ(*bias_bound(meta, Smoothness::kLipschitzOnly, 4), 5.0 * 2.0 / 2.0);
  EXPECT_THROW(bias_bound(meta, Smoothness::kLipschitzOnly, 0), InvalidArgument);
  // Both quadratic instances sit under their bound.
  const QuadraticProblem smooth = quad(1.0, QuadraticKind::kSmooth);
  EXPECT_LE(smooth.closed_form_bias(Vector::Zero(1), 16), *bias_bound(smooth.meta(), smooth.smoothness(), 16));
  const QuadraticProblem abs = quad(1.0, QuadraticKind::kNonsmooth);
  EXPECT_LE(abs.closed_form_bias(Vector::Zero(1), 16), *bias_bound(abs.meta(), abs.smoothness(), 16));
}
