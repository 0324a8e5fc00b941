#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "bsgd/common.hpp"
#include "bsgd/cso.hpp"
#include "bsgd/rng.hpp"

namespace bsgd {

/// Closed convex feasible set: all of R^d, a box, or a Euclidean ball.
/// Box bounds may be infinite.
class Domain {
 public:
  enum class Kind { kUnconstrained, kBox, kBall };

  static Domain unconstrained() { return Domain(Kind::kUnconstrained); }
  static Domain box(Vector lower, Vector upper);
  static Domain ball(Vector center, double radius);

  Kind kind() const { return kind_; }
  const Vector& lower() const { return a_; }
  const Vector& upper() const { return b_; }
  const Vector& center() const { return a_; }
  double radius() const { return radius_; }

  bool contains(const Vector& x, double tol = 1e-12) const;

 private:
  explicit Domain(Kind kind) : kind_(kind) {}

  Kind kind_;
  Vector a_;  // box lower, or ball center
  Vector b_;  // box upper
  double radius_ = 0.0;
};

/// Euclidean projection onto the domain.
Vector project(const Vector& x, const Domain& domain);

struct StepSchedule {
  enum class Kind { kStronglyConvex, kConstant, kDecaying };

  Kind kind = Kind::kConstant;
  double mu = 1.0;    // kStronglyConvex: gamma_t = 1/(mu t)
  double c = 1.0;     // kConstant: c/sqrt(T); kDecaying: c/sqrt(t)
  long horizon = 1;   // T for kConstant

  static StepSchedule strongly_convex(double mu);
  static StepSchedule constant(double c, long T);
  static StepSchedule decaying(double c);
};

double stepsize(const StepSchedule& s, long t);

struct BatchSchedule {
  enum class Kind { kFixed, kLinear, kCeilSqrt };

  Kind kind = Kind::kFixed;
  int m = 1;

  static BatchSchedule fixed(int m);
  static BatchSchedule linear() { return {Kind::kLinear, 1}; }
  static BatchSchedule ceil_sqrt() { return {Kind::kCeilSqrt, 1}; }
};

long inner_batch_size(const BatchSchedule& b, long t);

enum class OutputPolicy { kAverage, kUniformRandom, kStepsizeWeighted };

struct RunConfig {
  long T = 1;
  StepSchedule step;
  BatchSchedule batch;
  Domain domain = Domain::unconstrained();
  Vector x1;
  OutputPolicy output = OutputPolicy::kAverage;
  std::uint64_t seed = 0;
  long trace_every = 1;
  // Outer samples per iteration. Values above one average the estimator
  // over independent (xi, batch) draws; no rate claims attach to that mode.
  int outer_batch = 1;
};

struct RunTrace {
  std::vector<std::pair<long, Vector>> iterates;           // (t, x_t) at recorded strides
  std::vector<std::pair<long, Vector>> running_average;    // (t, mean of x_1..x_t)
  std::vector<std::pair<long, long>> samples_cumulative;   // samples used to reach x_t
  std::vector<double> gamma_history;                       // gamma_1..gamma_T
  Vector output_point;
  long output_index = 0;  // 1-based index of the selected iterate (0 for averaging)
  long total_samples = 0;
};

struct AdamState {
  Vector m1;
  Vector m2;
  long t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(Eigen::Index dim, double lr = 1e-3);
};

/// One bias-corrected Adam update.
std::pair<AdamState, Vector> adam_step(const AdamState& state, const Vector& grad, const Vector& x);

using GradientOracle = std::function<Vector(const CsoProblem&, const Vector&, const OuterSample&,
                                            const InnerBatch&)>;

struct RunOptions {
  // Defaults to estimate_gradient.
  GradientOracle gradient;
  // When set, the projected step uses Adam instead of the gamma_t schedule;
  // gamma_t is still recorded and drives stepsize-weighted output selection.
  std::optional<AdamState> adam;
  // Called after each produced iterate x_t (t = 1..T).
  std::function<void(long t, const Vector& x)> observer;
};

/// Projected stochastic gradient descent with the biased CSO estimator.
///
/// Performs T-1 updates x_{t+1} = Proj(x_t - gamma_t * grad), each consuming
/// one outer sample and m_t inner samples, and returns x_1..x_T summarised by
/// the output policy. Non-finite gradients abort with the failing t.
RunTrace bsgd_run(const CsoProblem& problem, const RunConfig& config, RngStreams& rng,
                  const RunOptions& options = {});
RunTrace bsgd_run(const CsoProblem& problem, const RunConfig& config,
                  const RunOptions& options = {});

/// 0-based index selected from T iterates by the policy; averaging returns -1.
long select_output_index(const std::vector<double>& gammas, long count, OutputPolicy policy,
                         Engine& rng);

Vector select_output(const std::vector<Vector>& iterates, const std::vector<double>& gammas,
                     OutputPolicy policy, Engine& rng);

/// Selection probabilities implied by a policy (uniform for kAverage).
std::vector<double> output_probabilities(const std::vector<double>& gammas, long count,
                                         OutputPolicy policy);

}  // namespace bsgd
