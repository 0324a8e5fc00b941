#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bsgd/cso.hpp"
#include "bsgd/nn.hpp"
#include "bsgd/problems.hpp"

namespace bsgd {

// ---------------------------------------------------------------------------
// Sample average approximation
// ---------------------------------------------------------------------------

/// Fixed pools: n outer samples, each with its own inner batch of size m.
/// Batches are stored after CsoProblem::summarize, which leaves the
/// empirical objective unchanged.
struct SaaInstance {
  std::shared_ptr<const CsoProblem> problem;
  std::vector<OuterSample> outer;
  std::vector<InnerBatch> inner;
  int m = 0;
};

/// Draws n outer samples from rng.outer and m inner samples for each from rng.inner.
SaaInstance make_saa_instance(std::shared_ptr<const CsoProblem> problem, long n, int m,
                              RngStreams& rng);
/// Wraps existing pools.
SaaInstance make_saa_instance(std::shared_ptr<const CsoProblem> problem,
                              std::vector<OuterSample> outer, std::vector<InnerBatch> inner);

/// (1/n) sum_i f_{xi_i}( (1/m) sum_j g_{eta_ij}(x, xi_i) )
double saa_objective(const SaaInstance& inst, const Vector& x);
Vector saa_gradient(const SaaInstance& inst, const Vector& x);

struct SaaResult {
  Vector x;
  double objective = 0.0;
  double grad_norm = 0.0;
  long iterations = 0;
  bool converged = false;
};

struct SaaOptions {
  double tol = 1e-9;
  long max_iters = 10000;
  double initial_step = 1.0;  // Armijo trial step at every iteration
  double armijo_c = 1e-4;
  double shrink = 0.5;
};

/// Full-batch gradient descent with Armijo backtracking, started at x0.
/// Stops when the gradient norm is <= tol; otherwise returns the best
/// iterate seen with converged = false.
SaaResult saa_solve(const SaaInstance& inst, const Vector& x0, const SaaOptions& options = {});

// ---------------------------------------------------------------------------
// First-order MAML
// ---------------------------------------------------------------------------

/// grad f_xi evaluated at the adapted weights w - alpha grad l(w, support):
/// the BSGD estimator with the inner Jacobian replaced by the identity.
/// Throws UnsupportedOperation for non-MAML problems.
Vector fo_maml_gradient(const CsoProblem& problem, const Vector& w, const OuterSample& xi,
                        const InnerBatch& batch);

// ---------------------------------------------------------------------------
// Two-stage least squares
// ---------------------------------------------------------------------------

struct LinearModel {
  Vector coefficients;
  double intercept = 0.0;
  // Fit diagnostics: stage-1 R^2 per regressor and human-readable warnings.
  Vector stage1_r2;
  std::vector<std::string> warnings;

  /// rows of X are observations.
  Vector predict(const Matrix& X) const;
};

/// Stage 1: X on [1, Z]. Stage 2: Y on [1, X_hat]. Rank deficiency in
/// either stage throws InvalidArgument naming the stage.
LinearModel two_sls_fit(const Matrix& X, const Matrix& Z, const Vector& Y);

/// All monomials of total degree 1..degree of the columns of A (n x p).
Matrix polynomial_features(const Matrix& A, int degree);

struct PolyModel {
  int degree = 1;
  double ridge_lambda = 0.0;
  LinearModel linear;  // over polynomial_features(X, degree)

  Vector predict(const Matrix& X) const;
};

/// 2SLS on polynomial feature expansions of X and Z with ridge-regularized
/// stages (intercepts unpenalized). degree = 1, lambda = 0 equals two_sls_fit.
PolyModel poly_two_sls_fit(const Matrix& X, const Matrix& Z, const Vector& Y, int degree,
                           double ridge_lambda);

/// Chooses (degree, lambda) by holdout 2SLS loss on the last holdout_fraction
/// of the rows, then refits on all rows.
PolyModel poly_two_sls_select(const Matrix& X, const Matrix& Z, const Vector& Y,
                              const std::vector<int>& degrees, const std::vector<double>& lambdas,
                              double holdout_fraction = 0.2);

// ---------------------------------------------------------------------------
// Direct regression
// ---------------------------------------------------------------------------

struct DirectNnOptions {
  std::vector<int> net_dims = {1, 40, 40, 1};
  long epochs = 10;
  double lr = 1e-2;
  int batch_size = 1;
};

/// Plain minibatch SGD on the mean squared error of Y against h(X), with
/// the sample order reshuffled each epoch.
Mlp direct_nn_fit(const Matrix& X, const Vector& Y, const DirectNnOptions& options, Engine& rng);

/// mean_i (prediction(x_i) - truth(x_i))^2
double test_mse(const std::function<double(double)>& prediction,
                const std::function<double(double)>& truth, const std::vector<double>& grid);
double test_mse(const LinearModel& model, IvTruth truth, const std::vector<double>& grid);
double test_mse(const PolyModel& model, IvTruth truth, const std::vector<double>& grid);
double test_mse(const MlpShape& shape, const Vector& weights, IvTruth truth,
                const std::vector<double>& grid);

}  // namespace bsgd
