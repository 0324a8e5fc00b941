#pragma once

#include <optional>
#include <string>

#include "bsgd/cso.hpp"
#include "bsgd/engine.hpp"
#include "bsgd/problems.hpp"

namespace bsgd {

/// F(x) - F(x_ref) from the problem's reference objective.
/// Throws UnsupportedOperation when the problem has none.
double suboptimality(const CsoProblem& problem, const Vector& x, const Vector& x_ref);
/// Against the closed-form minimizer.
double suboptimality(const QuadraticProblem& problem, const Vector& x);

struct MoreauConfig {
  double lambda = 0.5;
  int prox_iters = 200;
  int prox_samples = 1000;  // inner batch size per gradient estimate
  int prox_outer = 1;       // outer samples averaged per gradient estimate
  double tol = 1e-6;

  /// lambda = 1 / (2 |mu|); requires mu != 0.
  static MoreauConfig for_mu(double mu);
};

struct MoreauResult {
  double value = 0.0;  // ||prox - x|| / lambda
  Vector prox_point;
  double final_grad_norm = 0.0;  // subproblem gradient estimate at the returned point
  bool converged = false;        // final_grad_norm <= tol
};

/// Approximates prox_{lambda F}(x) by stochastic gradient descent on
/// z -> F(z) + ||z - x||^2 / (2 lambda) from z = x with steps lambda / k,
/// then returns the gradient mapping ||z - x|| / lambda.
MoreauResult moreau_grad_mapping(const CsoProblem& problem, const Vector& x,
                                 const MoreauConfig& cfg, RngStreams& rng);

enum class Theorem { kStronglyConvex, kConvex, kWeaklyConvex };

std::string to_string(Theorem theorem);

struct RunSummary {
  long T = 1;
  BatchSchedule batch;
  double c = 1.0;                  // stepsize constant (convex and weakly convex)
  double observed_gap = 0.0;       // mean over seeds
  int seeds = 1;
  std::optional<double> D;         // distance from x1 to the solution set
  bool D_assumed = false;          // D supplied by the user rather than computed
  std::optional<double> envelope_gap;  // F_lambda(x1) - min F, weakly convex only
};

struct GapReport {
  Theorem theorem = Theorem::kStronglyConvex;
  std::string theorem_name;
  std::string label;  // "exact" or "assumed-D"
  long T = 0;
  long m_first = 0;
  long m_last = 0;
  double observed_gap = 0.0;
  double optimization_term = 0.0;
  double bias_term = 0.0;
  double predicted_bound = 0.0;
  int seeds = 0;
  bool holds = false;  // observed <= predicted
};

/// (1/T) sum_{t=1..T} of the per-step bias contribution of the selected theorem:
/// Lipschitz outer f: 2 L_f sigma_g / sqrt(m_t), smooth outer f: S sigma_g^2 / m_t,
/// each multiplied by 4 |mu| for the weakly convex case.
double predicted_bias_term(const ProblemMeta& meta, Smoothness smoothness,
                           const BatchSchedule& batch, long T, Theorem theorem);

/// Evaluates the right-hand side of the selected theorem with the run's
/// (T, m_t, c) and pairs it with the observed gap. Missing constants throw
/// UnsupportedOperation listing the missing symbols.
GapReport bound_report(const ProblemMeta& meta, Smoothness smoothness, const RunSummary& run,
                       Theorem theorem);

}  // namespace bsgd
