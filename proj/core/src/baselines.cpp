#include "bsgd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bsgd {

// ---------------------------------------------------------------------------
// SAA
// ---------------------------------------------------------------------------

SaaInstance make_saa_instance(std::shared_ptr<const CsoProblem> problem, long n, int m,
                              RngStreams& rng) {
  require(problem != nullptr, "make_saa_instance: null problem");
  require(n >= 1 && m >= 1, "make_saa_instance: n and m must be >= 1");
  std::vector<OuterSample> outer;
  std::vector<InnerBatch> inner;
  outer.reserve(static_cast<std::size_t>(n));
  inner.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    outer.push_back(problem->sample_outer(rng.outer));
    inner.push_back(problem->summarize(outer.back(), problem->sample_inner(outer.back(), m, rng.inner)));
  }
  SaaInstance inst{std::move(problem), std::move(outer), std::move(inner), m};
  return inst;
}

SaaInstance make_saa_instance(std::shared_ptr<const CsoProblem> problem,
                              std::vector<OuterSample> outer, std::vector<InnerBatch> inner) {
  require(problem != nullptr, "make_saa_instance: null problem");
  require(!outer.empty() && outer.size() == inner.size(),
          "make_saa_instance: pools must be nonempty and of equal length");
  const int m = inner.front().size();
  for (std::size_t i = 0; i < inner.size(); ++i) {
    require(inner[i].size() >= 1, "make_saa_instance: empty inner batch");
    inner[i] = problem->summarize(outer[i], inner[i]);
  }
  return SaaInstance{std::move(problem), std::move(outer), std::move(inner), m};
}

namespace {

// Logistic pools collapse to (eta_bar, b) pairs; evaluate them as one matrix product.
struct LogisticView {
  Matrix eta;  // d x n
  Vector b;
};

std::optional<LogisticView> logistic_view(const SaaInstance& inst) {
  if (dynamic_cast<const InvariantLogisticProblem*>(inst.problem.get()) == nullptr) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(inst.outer.size());
  const Eigen::Index d = inst.inner.front().samples.rows();
  LogisticView view{Matrix(d, n), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = inst.inner[static_cast<std::size_t>(i)].samples;
    if (s.cols() != 1) return std::nullopt;
    view.eta.col(i) = s.col(0);
    view.b[i] = InvariantLogisticProblem::label(inst.outer[static_cast<std::size_t>(i)]);
  }
  return view;
}

struct Evaluator {
  const SaaInstance& inst;
  std::optional<LogisticView> view;

  explicit Evaluator(const SaaInstance& s) : inst(s), view(logistic_view(s)) {}

  double value(const Vector& x) const {
    if (view) {
      const Vector z = view->eta.transpose() * x;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < z.size(); ++i) acc += softplus(-view->b[i] * z[i]);
      return acc / static_cast<double>(z.size());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < inst.outer.size(); ++i)
      acc += estimate_value(*inst.problem, x, inst.outer[i], inst.inner[i]);
    return acc / static_cast<double>(inst.outer.size());
  }

  Vector gradient(const Vector& x) const {
    if (view) {
      const Vector z = view->eta.transpose() * x;
      Vector w(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double b = view->b[i];
        w[i] = -b / (1.0 + std::exp(b * z[i]));
      }
      return view->eta * w / static_cast<double>(z.size());
    }
    Vector acc = Vector::Zero(x.size());
    for (std::size_t i = 0; i < inst.outer.size(); ++i)
      acc += estimate_gradient(*inst.problem, x, inst.outer[i], inst.inner[i]);
    return acc / static_cast<double>(inst.outer.size());
  }
};

}  // namespace

double saa_objective(const SaaInstance& inst, const Vector& x) { return Evaluator(inst).value(x); }

Vector saa_gradient(const SaaInstance& inst, const Vector& x) { return Evaluator(inst).gradient(x); }

SaaResult saa_solve(const SaaInstance& inst, const Vector& x0, const SaaOptions& options) {
  require(!inst.outer.empty(), "saa_solve: empty pool");
  require(x0.size() == inst.problem->dim_x(), "saa_solve: x0 dimension mismatch");
  require(options.tol >= 0.0 && options.max_iters >= 0, "saa_solve: invalid options");
  const Evaluator eval(inst);

  SaaResult res;
  res.x = x0;
  res.objective = eval.value(x0);
  Vector g = eval.gradient(x0);
  res.grad_norm = g.norm();
  for (long k = 0; k < options.max_iters; ++k) {
    if (res.grad_norm <= options.tol) {
      res.converged = true;
      return res;
    }
    const double g2 = g.squaredNorm();
    // Below this, f differences are rounding noise and the Armijo test is
    // replaced by the gradient form of the same condition (approximate Armijo).
    const double resolution = 1e-12 * std::max(1.0, std::abs(res.objective));
    double step = options.initial_step;
    bool accepted = false;
    Vector trial, g_trial;
    double f_trial = 0.0;
    for (; step > 1e-20; step *= options.shrink) {
      trial = res.x - step * g;
      f_trial = eval.value(trial);
      if (f_trial <= res.objective - options.armijo_c * step * g2) {
        g_trial = eval.gradient(trial);
        accepted = true;
        break;
      }
      if (step * g2 <= resolution && f_trial <= res.objective + resolution) {
        g_trial = eval.gradient(trial);
        if (g_trial.dot(g) >= (1.0 - 2.0 * options.armijo_c) * g2) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) break;  // stalled at machine precision
    res.x = std::move(trial);
    res.objective = f_trial;
    g = std::move(g_trial);
    res.grad_norm = g.norm();
    res.iterations = k + 1;
  }
  res.converged = res.grad_norm <= options.tol;
  return res;
}

// ---------------------------------------------------------------------------
// FO-MAML
// ---------------------------------------------------------------------------

Vector fo_maml_gradient(const CsoProblem& problem, const Vector& w, const OuterSample& xi,
                        const InnerBatch& batch) {
  const auto* maml = dynamic_cast<const MamlSineProblem*>(&problem);
  if (maml == nullptr) {
    throw UnsupportedOperation("fo_maml_gradient: problem '" + problem.name() + "' is not MAML");
  }
  require(batch.size() >= 1, "fo_maml_gradient: empty support batch");
  return maml->f_grad(xi, maml->g_mean(w, xi, batch));
}

// ---------------------------------------------------------------------------
// 2SLS
// ---------------------------------------------------------------------------

Vector LinearModel::predict(const Matrix& X) const {
  require(X.cols() == coefficients.size(), "LinearModel::predict: column mismatch");
  return (X * coefficients).array() + intercept;
}

namespace {

Matrix with_intercept(const Matrix& A) {
  Matrix out(A.rows(), A.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(A.cols()) = A;
  return out;
}

double r_squared(const Vector& y, const Vector& fitted) {
  const double tss = (y.array() - y.mean()).square().sum();
  const double rss = (y - fitted).squaredNorm();
  if (tss == 0.0) return rss == 0.0 ? 1.0 : 0.0;
  return 1.0 - rss / tss;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// Least squares via column-pivoted QR with a rank check.
Matrix least_squares(const Matrix& A, const Matrix& B, const std::string& stage,
                     std::vector<std::string>* warnings) {
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  qr.setThreshold(1e-12);
  if (qr.rank() < A.cols()) {
    throw InvalidArgument(stage + ": design matrix is rank deficient (rank " +
                          std::to_string(qr.rank()) + " < " + std::to_string(A.cols()) + ")");
  }
  if (warnings != nullptr) {
    const auto diag = qr.matrixR().diagonal().cwiseAbs();
    const double cond = diag.maxCoeff() / diag.minCoeff();
    if (cond > 1e8) warnings->push_back(stage + ": design is ill-conditioned (R diagonal ratio " + format_double(cond) + ")");
  }
  return qr.solve(B);
}

struct RidgeFit {
  Matrix coef;      // p x k
  Vector intercept; // k
};

// Ridge with unpenalized intercept, solved as the augmented least-squares
// problem [A_c; sqrt(lambda) I] beta = [Y_c; 0].
RidgeFit ridge(const Matrix& A, const Matrix& Y, double lambda, const std::string& stage,
               std::vector<std::string>* warnings) {
  const Eigen::RowVectorXd a_mean = A.colwise().mean();
  const Eigen::RowVectorXd y_mean = Y.colwise().mean();
  const Matrix Ac = A.rowwise() - a_mean;
  const Matrix Yc = Y.rowwise() - y_mean;
  RidgeFit fit;
  if (lambda == 0.0) {
    fit.coef = least_squares(Ac, Yc, stage, warnings);
  } else {
    Matrix aug(Ac.rows() + Ac.cols(), Ac.cols());
    aug.topRows(Ac.rows()) = Ac;
    aug.bottomRows(Ac.cols()) = std::sqrt(lambda) * Matrix::Identity(Ac.cols(), Ac.cols());
    Matrix rhs = Matrix::Zero(aug.rows(), Yc.cols());
    rhs.topRows(Yc.rows()) = Yc;
    fit.coef = aug.colPivHouseholderQr().solve(rhs);
  }
  fit.intercept = (y_mean - a_mean * fit.coef).transpose();
  return fit;
}

void check_iv_shapes(const Matrix& X, const Matrix& Z, const Vector& Y) {
  require(X.rows() == Z.rows() && X.rows() == Y.size(), "2SLS: X, Z and Y must have equal rows");
  require(X.cols() >= 1 && Z.cols() >= 1, "2SLS: X and Z need at least one column");
  require(X.rows() > X.cols() && X.rows() > Z.cols(), "2SLS: need more observations than regressors");
}

}  // namespace

LinearModel two_sls_fit(const Matrix& X, const Matrix& Z, const Vector& Y) {
  check_iv_shapes(X, Z, Y);
  LinearModel model;
  const Matrix A1 = with_intercept(Z);
  const Matrix B1 = least_squares(A1, X, "2SLS stage 1 (X on [1, Z])", nullptr);
  const Matrix Xhat = A1 * B1;
  model.stage1_r2.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    model.stage1_r2[j] = r_squared(X.col(j), Xhat.col(j));
    if (model.stage1_r2[j] < 0.01) {
      model.warnings.push_back("2SLS stage 1: weak instrument for regressor " + std::to_string(j) +
                               " (R^2 = " + format_double(model.stage1_r2[j]) + ")");
    }
  }
  const Matrix A2 = with_intercept(Xhat);
  const Vector beta = least_squares(A2, Y, "2SLS stage 2 (Y on [1, X_hat])", &model.warnings);
  model.intercept = beta[0];
  model.coefficients = beta.tail(X.cols());
  return model;
}

Matrix polynomial_features(const Matrix& A, int degree) {
  require(degree >= 1, "polynomial_features: degree must be >= 1");
  const Eigen::Index p = A.cols();
  // Enumerate exponent multisets as nondecreasing index tuples, degree by degree.
  std::vector<std::vector<int>> terms;
  std::vector<int> current;
  std::function<void(int, int)> grow = [&](int start, int remaining) {
    if (remaining == 0) {
      terms.push_back(current);
      return;
    }
    for (int j = start; j < p; ++j) {
      current.push_back(j);
      grow(j, remaining - 1);
      current.pop_back();
    }
  };
  for (int k = 1; k <= degree; ++k) grow(0, k);
  Matrix out(A.rows(), static_cast<Eigen::Index>(terms.size()));
  for (std::size_t t = 0; t < terms.size(); ++t) {
    Vector col = Vector::Ones(A.rows());
    for (int j : terms[t]) col.array() *= A.col(j).array();
    out.col(static_cast<Eigen::Index>(t)) = col;
  }
  return out;
}

Vector PolyModel::predict(const Matrix& X) const {
  return linear.predict(polynomial_features(X, degree));
}

namespace {

struct PolyFit {
  PolyModel model;
  RidgeFit stage1;
};

PolyFit poly_fit(const Matrix& X, const Matrix& Z, const Vector& Y, int degree, double lambda) {
  const Matrix PX = polynomial_features(X, degree);
  const Matrix PZ = polynomial_features(Z, degree);
  PolyFit fit;
  fit.model.degree = degree;
  fit.model.ridge_lambda = lambda;
  fit.stage1 = ridge(PZ, PX, lambda, "Poly2SLS stage 1", nullptr);
  const Matrix PXhat = (PZ * fit.stage1.coef).rowwise() + fit.stage1.intercept.transpose();
  fit.model.linear.stage1_r2.resize(PX.cols());
  for (Eigen::Index j = 0; j < PX.cols(); ++j)
    fit.model.linear.stage1_r2[j] = r_squared(PX.col(j), PXhat.col(j));
  const RidgeFit s2 = ridge(PXhat, Y, lambda, "Poly2SLS stage 2", &fit.model.linear.warnings);
  fit.model.linear.coefficients = s2.coef.col(0);
  fit.model.linear.intercept = s2.intercept[0];
  return fit;
}

}  // namespace

PolyModel poly_two_sls_fit(const Matrix& X, const Matrix& Z, const Vector& Y, int degree,
                           double ridge_lambda) {
  check_iv_shapes(X, Z, Y);
  require(degree >= 1, "poly_two_sls_fit: degree must be >= 1");
  require(ridge_lambda >= 0.0, "poly_two_sls_fit: ridge_lambda must be >= 0");
  return poly_fit(X, Z, Y, degree, ridge_lambda).model;
}

PolyModel poly_two_sls_select(const Matrix& X, const Matrix& Z, const Vector& Y,
                              const std::vector<int>& degrees, const std::vector<double>& lambdas,
                              double holdout_fraction) {
  check_iv_shapes(X, Z, Y);
  require(!degrees.empty() && !lambdas.empty(), "poly_two_sls_select: empty grid");
  require(holdout_fraction > 0.0 && holdout_fraction < 1.0,
          "poly_two_sls_select: holdout_fraction must lie in (0, 1)");
  const Eigen::Index n = X.rows();
  const auto n_val = static_cast<Eigen::Index>(std::floor(holdout_fraction * static_cast<double>(n)));
  const Eigen::Index n_tr = n - n_val;
  require(n_val >= 1 && n_tr >= 2, "poly_two_sls_select: too few rows for a holdout split");

  double best_loss = std::numeric_limits<double>::infinity();
  int best_degree = degrees.front();
  double best_lambda = lambdas.front();
  for (int degree : degrees) {
    for (double lambda : lambdas) {
      PolyFit fit;
      try {
        fit = poly_fit(X.topRows(n_tr), Z.topRows(n_tr), Y.head(n_tr), degree, lambda);
      } catch (const InvalidArgument&) {
        continue;  // rank deficient at this setting
      }
      const Matrix PZv = polynomial_features(Z.bottomRows(n_val), degree);
      const Matrix PXhat = (PZv * fit.stage1.coef).rowwise() + fit.stage1.intercept.transpose();
      const Vector pred = fit.model.linear.predict(PXhat);
      const double loss = (Y.tail(n_val) - pred).squaredNorm() / static_cast<double>(n_val);
      if (loss < best_loss) {
        best_loss = loss;
        best_degree = degree;
        best_lambda = lambda;
      }
    }
  }
  return poly_two_sls_fit(X, Z, Y, best_degree, best_lambda);
}

// ---------------------------------------------------------------------------
// Direct regression
// ---------------------------------------------------------------------------

Mlp direct_nn_fit(const Matrix& X, const Vector& Y, const DirectNnOptions& options, Engine& rng) {
  require(X.rows() >= 1 && X.rows() == Y.size(), "direct_nn_fit: need nonempty matched data");
  require(options.epochs >= 0 && options.lr > 0.0 && options.batch_size >= 1,
          "direct_nn_fit: invalid options");
  require(options.net_dims.front() == X.cols() && options.net_dims.back() == 1,
          "direct_nn_fit: net_dims do not match the data");
  Mlp net = Mlp::glorot(options.net_dims, rng);
  const Eigen::Index n = X.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Batch batch;
  for (long epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += options.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(options.batch_size, n - start);
      batch.inputs.resize(len, X.cols());
      batch.targets.resize(len, 1);
      for (Eigen::Index r = 0; r < len; ++r) {
        const Eigen::Index i = order[static_cast<std::size_t>(start + r)];
        batch.inputs.row(r) = X.row(i);
        batch.targets(r, 0) = Y[i];
      }
      net.weights -= options.lr * mlp_loss_grad(net, batch).grad;
    }
    if (!net.weights.allFinite()) {
      throw NonFiniteError("direct_nn_fit: weights became non-finite in epoch " + std::to_string(epoch + 1));
    }
  }
  return net;
}

double test_mse(const std::function<double(double)>& prediction,
                const std::function<double(double)>& truth, const std::vector<double>& grid) {
  require(!grid.empty(), "test_mse: empty grid");
  double acc = 0.0;
  for (double x : grid) {
    const double r = prediction(x) - truth(x);
    acc += r * r;
  }
  return acc / static_cast<double>(grid.size());
}

namespace {

Matrix grid_matrix(const std::vector<double>& grid) {
  require(!grid.empty(), "test_mse: empty grid");
  return Eigen::Map<const Vector>(grid.data(), static_cast<Eigen::Index>(grid.size()));
}

double mse_against(const Vector& pred, IvTruth truth, const std::vector<double>& grid) {
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = pred[static_cast<Eigen::Index>(i)] - iv_truth(truth, grid[i]);
    acc += r * r;
  }
  return acc / static_cast<double>(grid.size());
}

}  // namespace

double test_mse(const LinearModel& model, IvTruth truth, const std::vector<double>& grid) {
  return mse_against(model.predict(grid_matrix(grid)), truth, grid);
}

double test_mse(const PolyModel& model, IvTruth truth, const std::vector<double>& grid) {
  return mse_against(model.predict(grid_matrix(grid)), truth, grid);
}

double test_mse(const MlpShape& shape, const Vector& weights, IvTruth truth,
                const std::vector<double>& grid) {
  return mse_against(mlp_forward(shape, weights, grid_matrix(grid)).col(0), truth, grid);
}

}  // namespace bsgd
