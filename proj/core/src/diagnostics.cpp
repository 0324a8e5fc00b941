#include "bsgd/diagnostics.hpp"

#include <cmath>

namespace bsgd {

double suboptimality(const CsoProblem& problem, const Vector& x, const Vector& x_ref) {
  const auto fx = problem.true_objective(x);
  const auto fr = problem.true_objective(x_ref);
  if (!fx || !fr) {
    throw UnsupportedOperation("suboptimality: problem '" + problem.name() +
                               "' has no reference objective");
  }
  return *fx - *fr;
}

double suboptimality(const QuadraticProblem& problem, const Vector& x) {
  return *problem.true_objective(x) - problem.optimal_value();
}

MoreauConfig MoreauConfig::for_mu(double mu) {
  require(mu != 0.0 && std::isfinite(mu), "MoreauConfig::for_mu: mu must be nonzero");
  MoreauConfig cfg;
  cfg.lambda = 1.0 / (2.0 * std::abs(mu));
  return cfg;
}

namespace {

Vector envelope_gradient(const CsoProblem& problem, const Vector& z, const Vector& x,
                         const MoreauConfig& cfg, RngStreams& rng) {
  Vector g = Vector::Zero(z.size());
  for (int k = 0; k < cfg.prox_outer; ++k) {
    const OuterSample xi = problem.sample_outer(rng.outer);
    const InnerBatch batch = problem.sample_inner(xi, cfg.prox_samples, rng.inner);
    g += estimate_gradient(problem, z, xi, batch);
  }
  g /= static_cast<double>(cfg.prox_outer);
  return g + (z - x) / cfg.lambda;
}

}  // namespace

MoreauResult moreau_grad_mapping(const CsoProblem& problem, const Vector& x,
                                 const MoreauConfig& cfg, RngStreams& rng) {
  require(cfg.lambda > 0.0 && std::isfinite(cfg.lambda), "moreau_grad_mapping: lambda must be > 0");
  require(cfg.prox_iters >= 1 && cfg.prox_samples >= 1 && cfg.prox_outer >= 1,
          "moreau_grad_mapping: iteration and sample counts must be >= 1");
  require(x.size() == problem.dim_x(), "moreau_grad_mapping: dimension mismatch");
  const std::optional<double> mu = problem.meta().mu;
  if (mu && *mu < 0.0) {
    require(cfg.lambda * std::abs(*mu) < 1.0, "moreau_grad_mapping: need lambda |mu| < 1");
  }

  Vector z = x;
  for (int k = 1; k <= cfg.prox_iters; ++k) {
    const Vector g = envelope_gradient(problem, z, x, cfg, rng);
    z -= (cfg.lambda / static_cast<double>(k)) * g;
    if (!z.allFinite()) {
      throw NonFiniteError("moreau_grad_mapping: prox iterate became non-finite at k=" + std::to_string(k));
    }
  }
  MoreauResult res;
  res.prox_point = z;
  res.value = (z - x).norm() / cfg.lambda;
  res.final_grad_norm = envelope_gradient(problem, z, x, cfg, rng).norm();
  res.converged = res.final_grad_norm <= cfg.tol;
  return res;
}

std::string to_string(Theorem theorem) {
  switch (theorem) {
    case Theorem::kStronglyConvex: return "strongly_convex";
    case Theorem::kConvex: return "convex";
    case Theorem::kWeaklyConvex: return "weakly_convex";
  }
  return "strongly_convex";
}

namespace {

void need(const std::optional<double>& value, const char* symbol, std::string& missing) {
  if (value) return;
  if (!missing.empty()) missing += ", ";
  missing += symbol;
}

void throw_if_missing(const std::string& missing, Theorem theorem) {
  if (!missing.empty()) {
    throw UnsupportedOperation("bound_report (" + to_string(theorem) + "): missing constants: " + missing);
  }
}

}  // namespace

double predicted_bias_term(const ProblemMeta& meta, Smoothness smoothness,
                           const BatchSchedule& batch, long T, Theorem theorem) {
  require(T >= 1, "predicted_bias_term: T must be >= 1");
  std::string missing;
  need(meta.sigma_g, "sigma_g", missing);
  const bool smooth = smoothness == Smoothness::kLipschitzSmooth;
  need(smooth ? meta.S : meta.L_f, smooth ? "S" : "L_f", missing);
  if (theorem == Theorem::kWeaklyConvex) need(meta.mu, "mu", missing);
  throw_if_missing(missing, theorem);

  const double sigma = *meta.sigma_g;
  const double scale = theorem == Theorem::kWeaklyConvex ? 4.0 * std::abs(*meta.mu) : 1.0;
  double sum = 0.0;
  for (long t = 1; t <= T; ++t) {
    const double m = static_cast<double>(inner_batch_size(batch, t));
    sum += smooth ? (*meta.S) * sigma * sigma / m : 2.0 * (*meta.L_f) * sigma / std::sqrt(m);
  }
  return scale * sum / static_cast<double>(T);
}

GapReport bound_report(const ProblemMeta& meta, Smoothness smoothness, const RunSummary& run,
                       Theorem theorem) {
  require(run.T >= 1, "bound_report: T must be >= 1");
  std::string missing;
  need(meta.M, "M", missing);
  switch (theorem) {
    case Theorem::kStronglyConvex:
      need(meta.mu, "mu", missing);
      break;
    case Theorem::kConvex:
      need(run.D, "D", missing);
      break;
    case Theorem::kWeaklyConvex:
      need(meta.mu, "mu", missing);
      need(run.envelope_gap, "F_lambda(x1) - min F", missing);
      break;
  }
  throw_if_missing(missing, theorem);

  GapReport rep;
  rep.theorem = theorem;
  rep.theorem_name = to_string(theorem);
  rep.label = run.D_assumed ? "assumed-D" : "exact";
  rep.T = run.T;
  rep.m_first = inner_batch_size(run.batch, 1);
  rep.m_last = inner_batch_size(run.batch, run.T);
  rep.observed_gap = run.observed_gap;
  rep.seeds = run.seeds;

  const double T = static_cast<double>(run.T);
  const double M2 = (*meta.M) * (*meta.M);
  switch (theorem) {
    case Theorem::kStronglyConvex:
      require(*meta.mu > 0.0, "bound_report: strongly convex bound needs mu > 0");
      rep.optimization_term = M2 * (std::log(T) + 1.0) / (*meta.mu * T);
      break;
    case Theorem::kConvex:
      require(run.c > 0.0, "bound_report: c must be > 0");
      rep.optimization_term = (M2 * run.c * run.c + (*run.D) * (*run.D)) / (2.0 * run.c * std::sqrt(T));
      break;
    case Theorem::kWeaklyConvex: {
      require(run.c > 0.0, "bound_report: c must be > 0");
      const double mu = std::abs(*meta.mu);
      rep.optimization_term =
          (2.0 * (*run.envelope_gap) + 2.0 * mu * M2 * run.c * run.c) / (run.c * std::sqrt(T));
      break;
    }
  }
  rep.bias_term = predicted_bias_term(meta, smoothness, run.batch, run.T, theorem);
  rep.predicted_bound = rep.optimization_term + rep.bias_term;
  rep.holds = rep.observed_gap <= rep.predicted_bound;
  return rep;
}

}  // namespace bsgd
