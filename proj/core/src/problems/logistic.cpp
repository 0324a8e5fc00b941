#include <cmath>
#include <numbers>

#include "bsgd/problems.hpp"

namespace bsgd {

double softplus(double z) {
  if (z == 0.0) return std::numbers::ln2;
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

namespace {

// b = +1 with probability 1 / (1 + exp(-a^T w)).
double draw_label(Engine& rng, const Vector& a, const Vector& w) {
  const double p = 1.0 / (1.0 + std::exp(-a.dot(w)));
  return draw_bernoulli(rng, p) ? 1.0 : -1.0;
}

}  // namespace

InvariantLogisticProblem::InvariantLogisticProblem(InvariantLogisticSpec spec)
    : spec_(std::move(spec)) {
  require(spec_.d >= 1, "logistic: d must be >= 1");
  require(spec_.sigma1_sq > 0.0, "logistic: sigma1^2 must be > 0");
  require(spec_.sigma2_sq > 0.0, "logistic: sigma2^2 must be > 0");
  require(spec_.n_outer_pool >= 0, "logistic: n_outer_pool must be >= 0");
  require(spec_.reference_size >= 1, "logistic: reference_size must be >= 1");

  Engine wrng(spec_.w_true_seed);
  w_true_.resize(spec_.d);
  for (int i = 0; i < spec_.d; ++i) w_true_[i] = draw_normal(wrng, 0.0, 1.0);
  w_true_.normalize();

  if (spec_.n_outer_pool > 0) {
    Engine prng(spec_.pool_seed);
    pool_.resize(spec_.d + 1, spec_.n_outer_pool);
    for (long j = 0; j < spec_.n_outer_pool; ++j) pool_.col(j) = draw_pair(prng).payload;
  }

  Engine rrng(spec_.reference_seed);
  reference_a_.resize(spec_.d, spec_.reference_size);
  reference_b_.resize(spec_.reference_size);
  for (long j = 0; j < spec_.reference_size; ++j) {
    const OuterSample s = draw_pair(rrng);
    reference_a_.col(j) = s.payload.head(spec_.d);
    reference_b_[j] = label(s);
  }
}

OuterSample InvariantLogisticProblem::make_outer(const Vector& a, double b) {
  OuterSample xi;
  xi.payload.resize(a.size() + 1);
  xi.payload.head(a.size()) = a;
  xi.payload[a.size()] = b;
  return xi;
}

OuterSample InvariantLogisticProblem::draw_pair(Engine& rng) const {
  const double sd = std::sqrt(spec_.sigma1_sq);
  Vector a(spec_.d);
  for (int i = 0; i < spec_.d; ++i) a[i] = draw_normal(rng, 0.0, sd);
  const double b = draw_label(rng, a, w_true_);
  return make_outer(a, b);
}

OuterSample InvariantLogisticProblem::sample_outer(Engine& rng) const {
  if (spec_.n_outer_pool == 0) return draw_pair(rng);
  std::uniform_int_distribution<long> pick(0, spec_.n_outer_pool - 1);
  return OuterSample{pool_.col(pick(rng))};
}

InnerBatch InvariantLogisticProblem::sample_inner(const OuterSample& xi, int m, Engine& rng) const {
  require(m >= 1, "sample_inner: m must be >= 1");
  const double sd = std::sqrt(spec_.sigma2_sq);
  InnerBatch batch;
  batch.samples.resize(spec_.d, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < spec_.d; ++i) batch.samples(i, j) = draw_normal(rng, xi.payload[i], sd);
  return batch;
}

Vector InvariantLogisticProblem::g_value(const Vector& x, const OuterSample& /*xi*/,
                                         const Eigen::Ref<const Vector>& eta) const {
  return Vector::Constant(1, eta.dot(x));
}

Vector InvariantLogisticProblem::g_jacobian_t(const Vector& /*x*/, const OuterSample& /*xi*/,
                                              const Eigen::Ref<const Vector>& eta,
                                              const Vector& v) const {
  return v[0] * eta;
}

double InvariantLogisticProblem::f_value(const OuterSample& xi, const Vector& u) const {
  return softplus(-label(xi) * u[0]);
}

Vector InvariantLogisticProblem::f_grad(const OuterSample& xi, const Vector& u) const {
  const double b = label(xi);
  return Vector::Constant(1, -b / (1.0 + std::exp(b * u[0])));
}

std::optional<double> InvariantLogisticProblem::true_objective(const Vector& x) const {
  if (x.size() != spec_.d) throw InvalidArgument("true_objective: dimension mismatch");
  // Accumulate offsets from log 2 so that F(0) is exactly log 2.
  const Vector z = reference_a_.transpose() * x;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) acc += softplus(-reference_b_[j] * z[j]) - std::numbers::ln2;
  return acc / static_cast<double>(z.size()) + std::numbers::ln2;
}

ProblemMeta InvariantLogisticProblem::meta() const {
  ProblemMeta meta;
  meta.L_f = 1.0;
  meta.S = 0.25;
  meta.mu = 0.0;
  return meta;
}

Vector InvariantLogisticProblem::g_mean(const Vector& x, const OuterSample& /*xi*/,
                                        const InnerBatch& batch) const {
  const Vector eta_bar = batch.samples.rowwise().mean();
  return Vector::Constant(1, eta_bar.dot(x));
}

Vector InvariantLogisticProblem::g_mean_jacobian_t(const Vector& /*x*/, const OuterSample& /*xi*/,
                                                   const InnerBatch& batch, const Vector& v) const {
  return v[0] * batch.samples.rowwise().mean();
}

InnerBatch InvariantLogisticProblem::summarize(const OuterSample& /*xi*/,
                                               const InnerBatch& batch) const {
  InnerBatch out;
  out.samples = batch.samples.rowwise().mean();
  return out;
}

std::vector<OuterSample> InvariantLogisticProblem::reference_samples() const {
  std::vector<OuterSample> out;
  out.reserve(static_cast<std::size_t>(reference_b_.size()));
  for (Eigen::Index j = 0; j < reference_b_.size(); ++j)
    out.push_back(make_outer(reference_a_.col(j), reference_b_[j]));
  return out;
}

std::shared_ptr<const InvariantLogisticProblem> make_invariant_logistic(
    const InvariantLogisticSpec& spec) {
  return std::make_shared<const InvariantLogisticProblem>(spec);
}

}  // namespace bsgd
