#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bsgd/common.hpp"
#include "bsgd/rng.hpp"

namespace bsgd {

/// One draw of the outer random variable xi. The payload layout is owned by
/// the problem that produced it; callers treat it as opaque.
struct OuterSample {
  Vector payload;
};

/// m draws of eta | xi, stored one per column.
struct InnerBatch {
  Matrix samples;

  int size() const { return static_cast<int>(samples.cols()); }
};

enum class Smoothness { kLipschitzOnly, kLipschitzSmooth };

/// Problem constants used for predicted-bound reporting only.
struct ProblemMeta {
  std::optional<double> L_f;      // outer Lipschitz constant
  std::optional<double> S;        // outer smoothness
  std::optional<double> sigma_g;  // inner standard deviation bound
  std::optional<double> mu;       // mu-convexity modulus (negative: weakly convex)
  std::optional<double> M;        // second-moment bound of the gradient estimator
};

/// Conditional stochastic optimization problem
///
///   F(x) = E_xi f_xi( E_{eta|xi} g_eta(x, xi) ).
///
/// The inner map g is k-valued and the decision variable has dimension d.
/// Jacobians are only ever used through transposed products J^T v, which is
/// all the estimator needs and avoids k x d matrices for neural problems.
///
/// Implementations are immutable after construction; all randomness comes
/// from the engine passed in, so one instance can serve parallel runs.
class CsoProblem {
 public:
  virtual ~CsoProblem() = default;

  virtual std::string name() const = 0;
  virtual int dim_x() const = 0;
  virtual int dim_inner() const = 0;

  virtual OuterSample sample_outer(Engine& rng) const = 0;
  virtual InnerBatch sample_inner(const OuterSample& xi, int m, Engine& rng) const = 0;

  virtual Vector g_value(const Vector& x, const OuterSample& xi,
                         const Eigen::Ref<const Vector>& eta) const = 0;
  // J^T v with J = d g_eta(x, xi) / dx (k x d).
  virtual Vector g_jacobian_t(const Vector& x, const OuterSample& xi,
                              const Eigen::Ref<const Vector>& eta, const Vector& v) const = 0;

  virtual double f_value(const OuterSample& xi, const Vector& u) const = 0;
  virtual Vector f_grad(const OuterSample& xi, const Vector& u) const = 0;

  virtual std::optional<double> true_objective(const Vector& /*x*/) const { return std::nullopt; }
  virtual Smoothness smoothness() const = 0;
  virtual ProblemMeta meta() const { return {}; }

  // Batch mean of g and of J^T v. The defaults loop over the batch; problems
  // override them when a fused evaluation is cheaper.
  virtual Vector g_mean(const Vector& x, const OuterSample& xi, const InnerBatch& batch) const;
  virtual Vector g_mean_jacobian_t(const Vector& x, const OuterSample& xi, const InnerBatch& batch,
                                   const Vector& v) const;

  // Replace a batch by an equivalent smaller one with the same mean of g and
  // of its Jacobian for every x. Problems whose g is affine in eta return the
  // column mean; the default keeps the batch.
  virtual InnerBatch summarize(const OuterSample& /*xi*/, const InnerBatch& batch) const {
    return batch;
  }
};

/// f_xi( (1/m) sum_j g_{eta_j}(x, xi) )
double estimate_value(const CsoProblem& p, const Vector& x, const OuterSample& xi,
                      const InnerBatch& batch);

/// ( (1/m) sum_j grad g_{eta_j} )^T grad f_xi( (1/m) sum_j g_{eta_j} )
///
/// This is the exact gradient of estimate_value in x.
Vector estimate_gradient(const CsoProblem& p, const Vector& x, const OuterSample& xi,
                         const InnerBatch& batch);

/// Monte-Carlo measurement of E[F_hat(x)] - F(x) at a fixed x.
struct BiasEstimate {
  int m = 0;
  double mean_gap = 0.0;  // signed: mean of F_hat minus F(x)
  double std_err = 0.0;
  long n_mc = 0;
};

/// Fresh (xi, batch) per replication; x is held fixed and independent of the
/// draws. Requires p.true_objective(x).
BiasEstimate estimate_bias(const CsoProblem& p, const Vector& x, int m, long n_mc,
                           RngStreams& rng);

/// Upper bound on |E F_hat - F| at batch size m from the problem constants:
/// S sigma_g^2 / (2 m) for smooth f, L_f sigma_g / sqrt(m) otherwise.
/// Empty when a needed constant is missing.
std::optional<double> bias_bound(const ProblemMeta& meta, Smoothness smoothness, int m);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least-squares line through (log key, log value).
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

}  // namespace bsgd
