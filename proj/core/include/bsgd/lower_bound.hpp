#pragma once

#include <cstdint>
#include <vector>

#include "bsgd/common.hpp"

namespace bsgd {

enum class HardVariant { kConvexAbs, kStronglyConvex };

/// One-dimensional hard function on [-1, 1]:
///   convex_abs:       F_v(x) = alpha |x - v|
///   strongly_convex:  F_v(x) = (x - v alpha)^2 / 2 + (alpha / 2) |x - v alpha|
/// Both have F* = 0.
struct HardInstance {
  int v = 1;  // +1 or -1
  double alpha = 0.1;
  HardVariant variant = HardVariant::kConvexAbs;

  double minimizer() const;
};

struct OracleParams {
  double B = 0.0;  // bias
  double V = 1.0;  // variance
};

struct ValueGrad {
  double value = 0.0;
  double grad = 0.0;
};

/// Exact value and subgradient; |.|' at 0 is taken as 0.
ValueGrad hard_value_grad(const HardInstance& inst, double x);

/// Draws xi ~ N(B, V) once and returns (F_v(x) + x v xi, F_v'(x) + v xi).
ValueGrad oracle_query(const HardInstance& inst, double x, const OracleParams& params, Engine& rng);

/// min over {x in [-1, 1] : x v <= 0} of F_v minus F*.
double wrong_side_gap(const HardInstance& inst);

struct AlphaRule {
  enum class Kind { kProportional, kBoundary };
  Kind kind = Kind::kProportional;
  double factor = 2.0;  // kProportional: alpha = factor * B

  /// kBoundary: alpha = B + sqrt(V / T) / 2.
  double alpha(double B, double V, long T) const;
};

struct FloorConfig {
  HardVariant variant = HardVariant::kConvexAbs;
  std::vector<double> B_list = {0.05, 0.1, 0.2, 0.4};
  double V = 1.0;
  long T = 10000;
  int n_seeds = 20;
  // Seed indices fed to derive_seed; when empty, 0..n_seeds-1.
  std::vector<std::uint64_t> seed_indices;
  // gamma = c / sqrt(T) for each c in the grid
  std::vector<double> step_grid = {0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0};
  AlphaRule alpha;
  double x1 = 0.0;
};

struct FloorRow {
  double B = 0.0;
  double alpha = 0.0;
  long T = 0;
  double best_c = 0.0;
  double mean_error = 0.0;
  double std_err = 0.0;
  long runs = 0;  // seeds x {v = +1, v = -1}
};

/// For each B: projected gradient descent on [-1, 1] from x1 with oracle
/// gradients and averaged output, for every stepsize in the grid; keeps the
/// stepsize with the lowest mean F_v(x_hat) - F* over seeds and both signs.
/// Runs for a given (B, v, seed) share their oracle noise across stepsizes.
std::vector<FloorRow> floor_experiment(const FloorConfig& config, std::uint64_t root_seed);

/// Pearson correlation of (B, mean_error) over the table.
double floor_correlation(const std::vector<FloorRow>& rows);

}  // namespace bsgd
