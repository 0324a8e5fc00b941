#include <gtest/gtest.h>

#include <cmath>

#include "bsgd/lower_bound.hpp"

using namespace bsgd;

TEST(HardValueGrad, Examples) {
  const auto a = hard_value_grad({1, 0.3, HardVariant::kConvexAbs}, 0.0);
  EXPECT_DOUBLE_EQ(a.value, 0.3);
  EXPECT_DOUBLE_EQ(a.grad, -0.3);
  const auto b = hard_value_grad({-1, 0.3, HardVariant::kConvexAbs}, -1.0);
  EXPECT_DOUBLE_EQ(b.value, 0.0);
  EXPECT_DOUBLE_EQ(b.grad, 0.0);
  const auto c = hard_value_grad({1, 0.5, HardVariant::kStronglyConvex}, 0.0);
  EXPECT_DOUBLE_EQ(c.value, 0.25);
  EXPECT_DOUBLE_EQ(c.grad, -0.75);
}

TEST(HardValueGrad, InvalidInstances) {
  EXPECT_THROW(hard_value_grad({0, 0.3, HardVariant::kConvexAbs}, 0.0), InvalidArgument);
  EXPECT_THROW(hard_value_grad({1, -0.3, HardVariant::kConvexAbs}, 0.0), InvalidArgument);
}

TEST(HardInstance, MinimizersAndWrongSideGap) {
  for (int v : {1, -1}) {
    const HardInstance abs_inst{v, 0.3, HardVariant::kConvexAbs};
    const HardInstance sc_inst{v, 0.3, HardVariant::kStronglyConvex};
    EXPECT_EQ(hard_value_grad(abs_inst, abs_inst.minimizer()).value, 0.0);
    EXPECT_EQ(hard_value_grad(sc_inst, sc_inst.minimizer()).value, 0.0);
    EXPECT_DOUBLE_EQ(wrong_side_gap(abs_inst), 0.3);
    EXPECT_DOUBLE_EQ(wrong_side_gap(sc_inst), 0.09);
    // v F_v decreasing on the wrong side, so the wrong-side minimum is at 0.
    for (double x = -1.0; x <= 0.0; x += 0.05) {
      EXPECT_GE(hard_value_grad(abs_inst, v * x).value, wrong_side_gap(abs_inst) - 1e-15);
      EXPECT_GE(hard_value_grad(sc_inst, v * x).value, wrong_side_gap(sc_inst) - 1e-15);
    }
  }
}

TEST(OracleQuery, NearNoiselessLimit) {
  const HardInstance inst{1, 0.3, HardVariant::kConvexAbs};
  Engine rng(1);
  double acc = 0.0;
  for (int i = 0; i < 100; ++i) acc += oracle_query(inst, 0.2, {0.0, 1e-12}, rng).grad;
  EXPECT_NEAR(acc / 100.0, hard_value_grad(inst, 0.2).grad, 1e-4);
}

TEST(OracleQuery, MeanAndVariance) {
  const HardInstance inst{1, 0.3, HardVariant::kConvexAbs};
  const OracleParams params{0.1, 1.0};
  Engine rng(2);
  const int n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = oracle_query(inst, 0.0, params, rng).grad;
    s += g;
    s2 += g * g;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, -0.3 + 0.1, 3.0 * std::sqrt(var / n));
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(OracleQuery, ContractProperties) {
  Engine rng(3);
  const OracleParams params{0.2, 0.5};
  for (int v : {1, -1}) {
    for (auto variant : {HardVariant::kConvexAbs, HardVariant::kStronglyConvex}) {
      const HardInstance inst{v, 0.4, variant};
      for (double x : {-1.0, -0.3, 0.0, 0.45, 1.0}) {
        // G is the pathwise derivative of h: same xi, so h(x) - F(x) = x v xi and G - F' = v xi.
        Engine a(10), b(10);
        const auto q = oracle_query(inst, x, params, a);
        const auto exact = hard_value_grad(inst, x);
        const double xi = (q.grad - exact.grad) / v;
        EXPECT_NEAR(q.value - exact.value, x * v * xi, 1e-14);
        // |E h - F| = |x| B <= B on [-1, 1]
        double acc = 0.0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) acc += oracle_query(inst, x, params, rng).value - exact.value;
        EXPECT_NEAR(std::abs(acc / n), std::abs(x) * params.B, 4.0 * std::abs(x) * std::sqrt(params.V / n) + 1e-15);
        (void)b;
      }
    }
  }
}

TEST(AlphaRule, Kinds) {
  AlphaRule prop;
  EXPECT_DOUBLE_EQ(prop.alpha(0.2, 1.0, 100), 0.4);
  AlphaRule boundary{AlphaRule::Kind::kBoundary, 0.0};
  EXPECT_DOUBLE_EQ(boundary.alpha(0.2, 1.0, 100), 0.25);
}

TEST(FloorExperiment, NoBiasNoFloor) {
  FloorConfig cfg;
  cfg.B_list = {1e-12};
  cfg.V = 0.01;
  cfg.T = 20000;
  cfg.n_seeds = 5;
  cfg.alpha = AlphaRule{AlphaRule::Kind::kProportional, 0.5e12};  // alpha = 0.5
  const auto rows = floor_experiment(cfg, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_LT(rows[0].mean_error, 0.05 * rows[0].alpha);
}

TEST(FloorExperiment, DeterministicAndShaped) {
  FloorConfig cfg;
  cfg.T = 500;
  cfg.n_seeds = 3;
  const auto a = floor_experiment(cfg, 7);
  const auto b = floor_experiment(cfg, 7);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mean_error, b[i].mean_error);
    EXPECT_EQ(a[i].runs, 6);
    EXPECT_EQ(a[i].B, cfg.B_list[i]);
    EXPECT_GE(a[i].mean_error, 0.0);
  }
}

TEST(FloorExperiment, BoundaryRegimeShowsFloor) {
  FloorConfig cfg;
  cfg.T = 2000;
  cfg.n_seeds = 10;
  cfg.alpha = AlphaRule{AlphaRule::Kind::kBoundary, 0.0};
  const auto rows = floor_experiment(cfg, 3);
  for (std::size_t i = 1; i < rows.size(); ++i)
    EXPECT_GE(rows[i].mean_error, rows[i - 1].mean_error - 2.0 * std::hypot(rows[i].std_err, rows[i - 1].std_err));
  EXPECT_GT(floor_correlation(rows), 0.9);
}

TEST(FloorExperiment, RejectsBadInput) {
  FloorConfig cfg;
  cfg.B_list = {0.0};
  EXPECT_THROW(floor_experiment(cfg, 1), InvalidArgument);
  cfg.B_list = {};
  EXPECT_THROW(floor_experiment(cfg, 1), InvalidArgument);
}
