#include "bsgd/lower_bound.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "bsgd/rng.hpp"

namespace bsgd {

namespace {

double sign0(double z) { return static_cast<double>((z > 0.0) - (z < 0.0)); }

void validate(const HardInstance& inst) {
  require(inst.v == 1 || inst.v == -1, "hard instance: v must be +1 or -1");
  require(inst.alpha > 0.0 && std::isfinite(inst.alpha), "hard instance: alpha must be > 0");
}

}  // namespace

double HardInstance::minimizer() const {
  return variant == HardVariant::kConvexAbs ? static_cast<double>(v) : v * alpha;
}

ValueGrad hard_value_grad(const HardInstance& inst, double x) {
  validate(inst);
  require(std::isfinite(x), "hard_value_grad: x must be finite");
  const double r = x - inst.minimizer();
  if (inst.variant == HardVariant::kConvexAbs) return {inst.alpha * std::abs(r), inst.alpha * sign0(r)};
  return {0.5 * r * r + 0.5 * inst.alpha * std::abs(r), r + 0.5 * inst.alpha * sign0(r)};
}

ValueGrad oracle_query(const HardInstance& inst, double x, const OracleParams& params, Engine& rng) {
  require(params.B >= 0.0 && params.V > 0.0, "oracle_query: need B >= 0 and V > 0");
  const ValueGrad exact = hard_value_grad(inst, x);
  const double xi = draw_normal(rng, params.B, std::sqrt(params.V));
  return {exact.value + x * inst.v * xi, exact.grad + inst.v * xi};
}

double wrong_side_gap(const HardInstance& inst) {
  // F_v decreases towards v on {x v <= 0}, so the minimum sits at x = 0.
  return hard_value_grad(inst, 0.0).value;
}

double AlphaRule::alpha(double B, double V, long T) const {
  if (kind == Kind::kProportional) return factor * B;
  return B + 0.5 * std::sqrt(V / static_cast<double>(T));
}

std::vector<FloorRow> floor_experiment(const FloorConfig& config, std::uint64_t root_seed) {
  require(!config.B_list.empty(), "floor_experiment: empty B list");
  for (double B : config.B_list) require(B > 0.0, "floor_experiment: B values must be positive");
  require(config.T >= 1, "floor_experiment: T must be >= 1");
  require(config.V > 0.0, "floor_experiment: V must be > 0");
  std::vector<std::uint64_t> seeds = config.seed_indices;
  if (seeds.empty()) {
    require(config.n_seeds >= 1, "floor_experiment: n_seeds must be >= 1");
    for (int s = 0; s < config.n_seeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  }
  require(!config.step_grid.empty(), "floor_experiment: empty stepsize grid");
  require(config.x1 >= -1.0 && config.x1 <= 1.0, "floor_experiment: x1 must lie in [-1, 1]");

  const double root_T = std::sqrt(static_cast<double>(config.T));
  std::vector<FloorRow> rows;
  for (double B : config.B_list) {
    const double alpha = config.alpha.alpha(B, config.V, config.T);
    const OracleParams params{B, config.V};
    FloorRow best;
    best.mean_error = std::numeric_limits<double>::infinity();
    for (double c : config.step_grid) {
      require(c > 0.0, "floor_experiment: stepsizes must be positive");
      const double gamma = c / root_T;
      std::vector<double> errors;
      errors.reserve(2 * seeds.size());
      for (int v : {1, -1}) {
        const HardInstance inst{v, alpha, config.variant};
        char coords[96];
        std::snprintf(coords, sizeof coords, "floor B=%.17g v=%d", B, v);
        for (std::uint64_t s : seeds) {
          Engine rng(derive_seed(root_seed, coords, s));
          double x = config.x1;
          double sum = 0.0;
          for (long t = 0; t < config.T; ++t) {
            sum += x;
            const ValueGrad q = oracle_query(inst, x, params, rng);
            x = std::clamp(x - gamma * q.grad, -1.0, 1.0);
          }
          const double x_hat = sum / static_cast<double>(config.T);
          errors.push_back(hard_value_grad(inst, x_hat).value);
        }
      }
      double mean = 0.0;
      for (double e : errors) mean += e;
      mean /= static_cast<double>(errors.size());
      if (mean < best.mean_error) {
        double ss = 0.0;
        for (double e : errors) ss += (e - mean) * (e - mean);
        const double n = static_cast<double>(errors.size());
        best.B = B;
        best.alpha = alpha;
        best.T = config.T;
        best.best_c = c;
        best.mean_error = mean;
        best.std_err = n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
        best.runs = static_cast<long>(errors.size());
      }
    }
    rows.push_back(best);
  }
  return rows;
}

double floor_correlation(const std::vector<FloorRow>& rows) {
  require(rows.size() >= 2, "floor_correlation: need at least two rows");
  const double n = static_cast<double>(rows.size());
  double mb = 0.0, me = 0.0;
  for (const auto& r : rows) {
    mb += r.B;
    me += r.mean_error;
  }
  mb /= n;
  me /= n;
  double sbe = 0.0, sbb = 0.0, see = 0.0;
  for (const auto& r : rows) {
    sbe += (r.B - mb) * (r.mean_error - me);
    sbb += (r.B - mb) * (r.B - mb);
    see += (r.mean_error - me) * (r.mean_error - me);
  }
  if (sbb == 0.0 || see == 0.0) return 0.0;
  return sbe / std::sqrt(sbb * see);
}

}  // namespace bsgd
