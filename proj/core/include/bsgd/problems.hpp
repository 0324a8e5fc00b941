#pragma once

#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "bsgd/cso.hpp"
#include "bsgd/engine.hpp"
#include "bsgd/nn.hpp"

namespace bsgd {

// ---------------------------------------------------------------------------
// Synthetic quadratic / absolute-value family with closed-form objective.
//
//   g_eta(x, xi) = x + eta,        eta ~ N(0, sigma^2 I_d)
//   smooth:    f_xi(u) = ||u - y_xi 1||_2^2
//   nonsmooth: f_xi(u) = ||u - y_xi 1||_1
// ---------------------------------------------------------------------------

/// Law of the scalar outer shift y_xi.
struct ShiftLaw {
  enum class Kind { kConstant, kNormal, kUniform, kTwoPoint };

  Kind kind = Kind::kConstant;
  double a = 0.0;  // constant value | normal mean | uniform lower | first atom
  double b = 0.0;  // normal stddev  | uniform upper | second atom
  double p = 0.5;  // probability of the first atom

  static ShiftLaw constant(double value) { return {Kind::kConstant, value, 0.0, 0.5}; }
  static ShiftLaw normal(double mean, double stddev) { return {Kind::kNormal, mean, stddev, 0.5}; }
  static ShiftLaw uniform(double lo, double hi) { return {Kind::kUniform, lo, hi, 0.5}; }
  static ShiftLaw two_point(double first, double second, double p_first) {
    return {Kind::kTwoPoint, first, second, p_first};
  }

  double mean() const;
  double variance() const;
  double median() const;
  /// E|x - y|
  double expected_abs_deviation(double x) const;
  double draw(Engine& rng) const;
};

enum class QuadraticKind { kSmooth, kNonsmooth };

struct QuadraticCsoSpec {
  int d = 1;
  double sigma_inner = 1.0;
  ShiftLaw shift = ShiftLaw::constant(0.0);
  QuadraticKind kind = QuadraticKind::kSmooth;
};

class QuadraticProblem final : public CsoProblem {
 public:
  explicit QuadraticProblem(QuadraticCsoSpec spec);

  std::string name() const override;
  int dim_x() const override { return spec_.d; }
  int dim_inner() const override { return spec_.d; }
  OuterSample sample_outer(Engine& rng) const override;
  InnerBatch sample_inner(const OuterSample& xi, int m, Engine& rng) const override;
  Vector g_value(const Vector& x, const OuterSample& xi,
                 const Eigen::Ref<const Vector>& eta) const override;
  Vector g_jacobian_t(const Vector& x, const OuterSample& xi, const Eigen::Ref<const Vector>& eta,
                      const Vector& v) const override;
  double f_value(const OuterSample& xi, const Vector& u) const override;
  Vector f_grad(const OuterSample& xi, const Vector& u) const override;
  std::optional<double> true_objective(const Vector& x) const override;
  Smoothness smoothness() const override;
  ProblemMeta meta() const override;
  Vector g_mean(const Vector& x, const OuterSample& xi, const InnerBatch& batch) const override;
  Vector g_mean_jacobian_t(const Vector& x, const OuterSample& xi, const InnerBatch& batch,
                           const Vector& v) const override;
  InnerBatch summarize(const OuterSample& xi, const InnerBatch& batch) const override;

  const QuadraticCsoSpec& spec() const { return spec_; }
  Vector minimizer() const;
  double optimal_value() const;
  /// Constants over a feasible set; M is only finite for bounded domains.
  ProblemMeta meta_for(const Domain& domain) const;
  /// Closed-form E[F_hat(x)] - F(x) for batch size m. The nonsmooth kind
  /// needs a constant shift law.
  double closed_form_bias(const Vector& x, int m) const;

 private:
  QuadraticCsoSpec spec_;
};

std::shared_ptr<const QuadraticProblem> make_quadratic(const QuadraticCsoSpec& spec);

// ---------------------------------------------------------------------------
// Invariant logistic regression
//   min_x E_{(a,b)} log(1 + exp(-b E[eta | a]^T x)),  eta | a ~ N(a, sigma2^2 I)
// ---------------------------------------------------------------------------

struct InvariantLogisticSpec {
  int d = 10;
  double sigma1_sq = 1.0;
  double sigma2_sq = 1.0;
  std::uint64_t w_true_seed = 2020;
  long n_outer_pool = 0;  // 0: fresh (a, b) per draw
  std::uint64_t pool_seed = 1;
  long reference_size = 50000;
  std::uint64_t reference_seed = 7;
};

class InvariantLogisticProblem final : public CsoProblem {
 public:
  explicit InvariantLogisticProblem(InvariantLogisticSpec spec);

  std::string name() const override { return "invariant_logistic"; }
  int dim_x() const override { return spec_.d; }
  int dim_inner() const override { return 1; }
  OuterSample sample_outer(Engine& rng) const override;
  InnerBatch sample_inner(const OuterSample& xi, int m, Engine& rng) const override;
  Vector g_value(const Vector& x, const OuterSample& xi,
                 const Eigen::Ref<const Vector>& eta) const override;
  Vector g_jacobian_t(const Vector& x, const OuterSample& xi, const Eigen::Ref<const Vector>& eta,
                      const Vector& v) const override;
  double f_value(const OuterSample& xi, const Vector& u) const override;
  Vector f_grad(const OuterSample& xi, const Vector& u) const override;
  /// Mean over the reference pairs of log(1 + exp(-b a^T x)); exact log 2 at x = 0.
  std::optional<double> true_objective(const Vector& x) const override;
  Smoothness smoothness() const override { return Smoothness::kLipschitzSmooth; }
  ProblemMeta meta() const override;
  Vector g_mean(const Vector& x, const OuterSample& xi, const InnerBatch& batch) const override;
  Vector g_mean_jacobian_t(const Vector& x, const OuterSample& xi, const InnerBatch& batch,
                           const Vector& v) const override;
  InnerBatch summarize(const OuterSample& xi, const InnerBatch& batch) const override;

  const InvariantLogisticSpec& spec() const { return spec_; }
  const Vector& w_true() const { return w_true_; }
  /// Reference pairs as outer samples (payload = [a; b]).
  std::vector<OuterSample> reference_samples() const;

  static OuterSample make_outer(const Vector& a, double b);
  static double label(const OuterSample& xi) { return xi.payload[xi.payload.size() - 1]; }

 private:
  OuterSample draw_pair(Engine& rng) const;

  InvariantLogisticSpec spec_;
  Vector w_true_;
  Matrix pool_;             // (d + 1) x n_outer_pool, columns are payloads
  Matrix reference_a_;      // d x reference_size
  Vector reference_b_;
};

std::shared_ptr<const InvariantLogisticProblem> make_invariant_logistic(
    const InvariantLogisticSpec& spec);

/// log(1 + exp(z)) without overflow.
double softplus(double z);

// ---------------------------------------------------------------------------
// Sine-wave MAML
//   f_xi(w) = l(w, D_query),  g_eta(w, xi) = w - alpha grad l(w, D_support)
// ---------------------------------------------------------------------------

struct MamlSineSpec {
  double alpha = 0.01;
  double amp_lo = 0.1, amp_hi = 5.0;
  double phase_lo = 0.0, phase_hi = std::numbers::pi;
  double x_lo = -5.0, x_hi = 5.0;
  int query_size = 1;
  std::vector<int> net_dims = {1, 40, 40, 1};
  // Reference objective (Monte-Carlo over fresh tasks with a recorded seed).
  long reference_tasks = 100;
  long reference_query = 100;
  long reference_support = 100;
  std::uint64_t reference_seed = 11;
};

/// Outer payload layout: [amplitude, phase, query x_1..x_n, query y_1..y_n].
/// Inner batch columns: (x, y) support points of the same task.
class MamlSineProblem final : public CsoProblem {
 public:
  explicit MamlSineProblem(MamlSineSpec spec);

  std::string name() const override { return "maml_sine"; }
  int dim_x() const override { return shape_.num_params(); }
  int dim_inner() const override { return shape_.num_params(); }
  OuterSample sample_outer(Engine& rng) const override;
  InnerBatch sample_inner(const OuterSample& xi, int m, Engine& rng) const override;
  Vector g_value(const Vector& w, const OuterSample& xi,
                 const Eigen::Ref<const Vector>& eta) const override;
  Vector g_jacobian_t(const Vector& w, const OuterSample& xi, const Eigen::Ref<const Vector>& eta,
                      const Vector& v) const override;
  double f_value(const OuterSample& xi, const Vector& u) const override;
  Vector f_grad(const OuterSample& xi, const Vector& u) const override;
  std::optional<double> true_objective(const Vector& w) const override;
  Smoothness smoothness() const override { return Smoothness::kLipschitzSmooth; }
  Vector g_mean(const Vector& w, const OuterSample& xi, const InnerBatch& batch) const override;
  Vector g_mean_jacobian_t(const Vector& w, const OuterSample& xi, const InnerBatch& batch,
                           const Vector& v) const override;

  const MamlSineSpec& spec() const { return spec_; }
  const MlpShape& shape() const { return shape_; }
  Vector initial_weights(Engine& rng) const;

  Batch query_batch(const OuterSample& xi) const;
  static Batch support_batch(const InnerBatch& batch);
  static Batch support_batch(const Eigen::Ref<const Vector>& eta);

 private:
  MamlSineSpec spec_;
  MlpShape shape_;
};

std::shared_ptr<const MamlSineProblem> make_maml_sine(const MamlSineSpec& spec);

/// (1/T) sum_tasks (1/N) sum_query l(w - alpha (1/M) sum_support grad l, query point).
/// Per task the draws are: amplitude, phase, N query inputs, then M support inputs.
double maml_empirical_objective(const Vector& w, const MamlSineSpec& spec, long tasks, long query,
                                long support, Engine& rng);

// ---------------------------------------------------------------------------
// Instrumental-variable regression
//   Z ~ U([-3,3]^2), e ~ N(0,1), gamma, delta ~ N(0, noise_var)
//   X = 0.5 z + 0.5 e + gamma,  Y = g(X) + e + delta
//   f_xi(u) = (Y - u)^2, g_eta(w, xi) = h(w, X'), X' ~ X | Z
// ---------------------------------------------------------------------------

enum class IvTruth { kAbs, kLinear, kSine, kStep };
enum class IvInstrument { kMean, kFirst };  // z = (Z1 + Z2)/2 or z = Z1

double iv_truth(IvTruth truth, double x);
std::string to_string(IvTruth truth);
IvTruth iv_truth_from_string(const std::string& name);

/// x_i = -5 + 0.01 i, i = 1..1000.
std::vector<double> iv_test_grid();

struct IvSpec {
  IvTruth truth = IvTruth::kAbs;
  IvInstrument instrument = IvInstrument::kMean;
  double noise_var = 0.1;
  std::vector<int> net_dims = {1, 40, 40, 1};
  long n_outer_pool = 0;  // 0: online sampling
  std::uint64_t pool_seed = 3;
  long reference_outer = 2000;
  long reference_inner = 200;
  std::uint64_t reference_seed = 13;
};

/// Observed data in the layout the 2SLS family expects.
struct IvData {
  Matrix X;  // n x 1
  Matrix Z;  // n x 2
  Vector Y;  // n
};

/// Outer payload layout: [Y, Z1, Z2, X_observed]. Inner batch: 1 x m draws of X | Z.
class IvProblem final : public CsoProblem {
 public:
  explicit IvProblem(IvSpec spec);

  std::string name() const override { return "iv_" + to_string(spec_.truth); }
  int dim_x() const override { return shape_.num_params(); }
  int dim_inner() const override { return 1; }
  OuterSample sample_outer(Engine& rng) const override;
  InnerBatch sample_inner(const OuterSample& xi, int m, Engine& rng) const override;
  Vector g_value(const Vector& w, const OuterSample& xi,
                 const Eigen::Ref<const Vector>& eta) const override;
  Vector g_jacobian_t(const Vector& w, const OuterSample& xi, const Eigen::Ref<const Vector>& eta,
                      const Vector& v) const override;
  double f_value(const OuterSample& xi, const Vector& u) const override;
  Vector f_grad(const OuterSample& xi, const Vector& u) const override;
  std::optional<double> true_objective(const Vector& w) const override;
  Smoothness smoothness() const override { return Smoothness::kLipschitzSmooth; }
  Vector g_mean(const Vector& w, const OuterSample& xi, const InnerBatch& batch) const override;
  Vector g_mean_jacobian_t(const Vector& w, const OuterSample& xi, const InnerBatch& batch,
                           const Vector& v) const override;

  const IvSpec& spec() const { return spec_; }
  const MlpShape& shape() const { return shape_; }
  /// Instrument summary entering X: mean of (Z1, Z2) or Z1.
  double instrument_value(double z1, double z2) const;
  /// Fresh draw from the generative process.
  OuterSample draw(Engine& rng) const;
  /// Observed data of the outer pool (requires n_outer_pool > 0).
  IvData pool_data() const;
  static IvData to_data(const std::vector<OuterSample>& samples);

 private:
  IvSpec spec_;
  MlpShape shape_;
  std::vector<OuterSample> pool_;
  Vector reference_y_;
  Matrix reference_x_;  // reference_inner x reference_outer
};

std::shared_ptr<const IvProblem> make_iv(const IvSpec& spec);

}  // namespace bsgd
