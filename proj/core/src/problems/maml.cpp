#include <cmath>

#include "bsgd/problems.hpp"

namespace bsgd {

namespace {

struct Task {
  double amp;
  double phase;
};

Task draw_task(const MamlSineSpec& spec, Engine& rng) {
  const double amp = draw_uniform(rng, spec.amp_lo, spec.amp_hi);
  const double phase = draw_uniform(rng, spec.phase_lo, spec.phase_hi);
  return {amp, phase};
}

Batch draw_points(const MamlSineSpec& spec, const Task& task, long n, Engine& rng) {
  Batch b;
  b.inputs.resize(n, 1);
  b.targets.resize(n, 1);
  for (long i = 0; i < n; ++i) {
    const double x = draw_uniform(rng, spec.x_lo, spec.x_hi);
    b.inputs(i, 0) = x;
    b.targets(i, 0) = task.amp * std::sin(x + task.phase);
  }
  return b;
}

void validate(const MamlSineSpec& spec) {
  require(spec.amp_lo <= spec.amp_hi, "maml: amplitude range must satisfy lo <= hi");
  require(spec.phase_lo <= spec.phase_hi, "maml: phase range must satisfy lo <= hi");
  require(spec.x_lo < spec.x_hi, "maml: x range must satisfy lo < hi");
  require(spec.query_size >= 1, "maml: query_size must be >= 1");
  require(spec.net_dims.size() >= 2 && spec.net_dims.front() == 1 && spec.net_dims.back() == 1,
          "maml: net_dims must map 1 input to 1 output");
}

}  // namespace

MamlSineProblem::MamlSineProblem(MamlSineSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  shape_ = MlpShape(spec_.net_dims);
}

OuterSample MamlSineProblem::sample_outer(Engine& rng) const {
  const Task task = draw_task(spec_, rng);
  const Batch q = draw_points(spec_, task, spec_.query_size, rng);
  const int n = spec_.query_size;
  OuterSample xi;
  xi.payload.resize(2 + 2 * n);
  xi.payload[0] = task.amp;
  xi.payload[1] = task.phase;
  xi.payload.segment(2, n) = q.inputs.col(0);
  xi.payload.segment(2 + n, n) = q.targets.col(0);
  return xi;
}

InnerBatch MamlSineProblem::sample_inner(const OuterSample& xi, int m, Engine& rng) const {
  require(m >= 1, "sample_inner: m must be >= 1");
  const Batch s = draw_points(spec_, {xi.payload[0], xi.payload[1]}, m, rng);
  InnerBatch batch;
  batch.samples.resize(2, m);
  batch.samples.row(0) = s.inputs.col(0).transpose();
  batch.samples.row(1) = s.targets.col(0).transpose();
  return batch;
}

Batch MamlSineProblem::query_batch(const OuterSample& xi) const {
  const Eigen::Index n = (xi.payload.size() - 2) / 2;
  Batch q;
  q.inputs = xi.payload.segment(2, n);
  q.targets = xi.payload.segment(2 + n, n);
  return q;
}

Batch MamlSineProblem::support_batch(const InnerBatch& batch) {
  Batch s;
  s.inputs = batch.samples.row(0).transpose();
  s.targets = batch.samples.row(1).transpose();
  return s;
}

Batch MamlSineProblem::support_batch(const Eigen::Ref<const Vector>& eta) {
  Batch s;
  s.inputs = Matrix::Constant(1, 1, eta[0]);
  s.targets = Matrix::Constant(1, 1, eta[1]);
  return s;
}

Vector MamlSineProblem::g_value(const Vector& w, const OuterSample& /*xi*/,
                                const Eigen::Ref<const Vector>& eta) const {
  return w - spec_.alpha * mlp_loss_grad(shape_, w, support_batch(eta)).grad;
}

Vector MamlSineProblem::g_jacobian_t(const Vector& w, const OuterSample& /*xi*/,
                                     const Eigen::Ref<const Vector>& eta, const Vector& v) const {
  if (spec_.alpha == 0.0) return v;
  return v - spec_.alpha * mlp_hvp(shape_, w, support_batch(eta), v);
}

double MamlSineProblem::f_value(const OuterSample& xi, const Vector& u) const {
  return mlp_loss(shape_, u, query_batch(xi));
}

Vector MamlSineProblem::f_grad(const OuterSample& xi, const Vector& u) const {
  return mlp_loss_grad(shape_, u, query_batch(xi)).grad;
}

std::optional<double> MamlSineProblem::true_objective(const Vector& w) const {
  Engine rng(spec_.reference_seed);
  return maml_empirical_objective(w, spec_, spec_.reference_tasks, spec_.reference_query,
                                  spec_.reference_support, rng);
}

Vector MamlSineProblem::g_mean(const Vector& w, const OuterSample& /*xi*/,
                               const InnerBatch& batch) const {
  // The batch loss is the mean of per-point losses, so its gradient is the mean gradient.
  return w - spec_.alpha * mlp_loss_grad(shape_, w, support_batch(batch)).grad;
}

Vector MamlSineProblem::g_mean_jacobian_t(const Vector& w, const OuterSample& /*xi*/,
                                          const InnerBatch& batch, const Vector& v) const {
  if (spec_.alpha == 0.0) return v;
  return v - spec_.alpha * mlp_hvp(shape_, w, support_batch(batch), v);
}

Vector MamlSineProblem::initial_weights(Engine& rng) const {
  return Mlp::glorot(spec_.net_dims, rng).weights;
}

std::shared_ptr<const MamlSineProblem> make_maml_sine(const MamlSineSpec& spec) {
  return std::make_shared<const MamlSineProblem>(spec);
}

double maml_empirical_objective(const Vector& w, const MamlSineSpec& spec, long tasks, long query,
                                long support, Engine& rng) {
  require(tasks >= 1 && query >= 1 && support >= 1, "maml_empirical_objective: sizes must be >= 1");
  validate(spec);
  const MlpShape shape(spec.net_dims);
  require(w.size() == shape.num_params(), "maml_empirical_objective: weight dimension mismatch");
  double total = 0.0;
  for (long i = 0; i < tasks; ++i) {
    const Task task = draw_task(spec, rng);
    const Batch q = draw_points(spec, task, query, rng);
    const Batch s = draw_points(spec, task, support, rng);
    const Vector adapted = w - spec.alpha * mlp_loss_grad(shape, w, s).grad;
    total += mlp_loss(shape, adapted, q);
  }
  return total / static_cast<double>(tasks);
}

}  // namespace bsgd
