#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bsgd/problems.hpp"

namespace bsgd {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// E|c + s Z| for Z ~ N(0, 1).
double folded_normal_mean(double c, double s) {
  if (s == 0.0) return std::abs(c);
  const double z = c / s;
  return s * 2.0 * normal_pdf(z) + c * (2.0 * normal_cdf(z) - 1.0);
}

double shift_of(const OuterSample& xi) { return xi.payload[0]; }

}  // namespace

double ShiftLaw::mean() const {
  switch (kind) {
    case Kind::kConstant: return a;
    case Kind::kNormal: return a;
    case Kind::kUniform: return 0.5 * (a + b);
    case Kind::kTwoPoint: return p * a + (1.0 - p) * b;
  }
  return 0.0;
}

double ShiftLaw::variance() const {
  switch (kind) {
    case Kind::kConstant: return 0.0;
    case Kind::kNormal: return b * b;
    case Kind::kUniform: return (b - a) * (b - a) / 12.0;
    case Kind::kTwoPoint: return p * (1.0 - p) * (a - b) * (a - b);
  }
  return 0.0;
}

double ShiftLaw::median() const {
  switch (kind) {
    case Kind::kConstant: return a;
    case Kind::kNormal: return a;
    case Kind::kUniform: return 0.5 * (a + b);
    case Kind::kTwoPoint:
      if (p > 0.5) return a;
      if (p < 0.5) return b;
      return 0.5 * (a + b);
  }
  return 0.0;
}

double ShiftLaw::expected_abs_deviation(double x) const {
  switch (kind) {
    case Kind::kConstant:
      return std::abs(x - a);
    case Kind::kNormal:
      return folded_normal_mean(x - a, b);
    case Kind::kUniform: {
      if (x <= a) return 0.5 * (a + b) - x;
      if (x >= b) return x - 0.5 * (a + b);
      return ((x - a) * (x - a) + (b - x) * (b - x)) / (2.0 * (b - a));
    }
    case Kind::kTwoPoint:
      return p * std::abs(x - a) + (1.0 - p) * std::abs(x - b);
  }
  return 0.0;
}

double ShiftLaw::draw(Engine& rng) const {
  switch (kind) {
    case Kind::kConstant: return a;
    case Kind::kNormal: return draw_normal(rng, a, b);
    case Kind::kUniform: return draw_uniform(rng, a, b);
    case Kind::kTwoPoint: return draw_bernoulli(rng, p) ? a : b;
  }
  return 0.0;
}

QuadraticProblem::QuadraticProblem(QuadraticCsoSpec spec) : spec_(std::move(spec)) {
  require(spec_.d >= 1, "quadratic: d must be >= 1");
  require(spec_.sigma_inner >= 0.0 && std::isfinite(spec_.sigma_inner),
          "quadratic: sigma_inner must be >= 0");
  if (spec_.shift.kind == ShiftLaw::Kind::kUniform) {
    require(spec_.shift.a <= spec_.shift.b, "quadratic: uniform shift needs lo <= hi");
  }
  if (spec_.shift.kind == ShiftLaw::Kind::kNormal) {
    require(spec_.shift.b >= 0.0, "quadratic: normal shift needs stddev >= 0");
  }
  if (spec_.shift.kind == ShiftLaw::Kind::kTwoPoint) {
    require(spec_.shift.p >= 0.0 && spec_.shift.p <= 1.0, "quadratic: p must lie in [0, 1]");
  }
}

std::string QuadraticProblem::name() const {
  return spec_.kind == QuadraticKind::kSmooth ? "quadratic_smooth" : "quadratic_nonsmooth";
}

OuterSample QuadraticProblem::sample_outer(Engine& rng) const {
  OuterSample xi;
  xi.payload = Vector::Constant(1, spec_.shift.draw(rng));
  return xi;
}

InnerBatch QuadraticProblem::sample_inner(const OuterSample& /*xi*/, int m, Engine& rng) const {
  require(m >= 1, "sample_inner: m must be >= 1");
  InnerBatch batch;
  batch.samples.resize(spec_.d, m);
  if (spec_.sigma_inner == 0.0) {
    batch.samples.setZero();
    return batch;
  }
  std::normal_distribution<double> dist(0.0, spec_.sigma_inner);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < spec_.d; ++i) batch.samples(i, j) = dist(rng);
  return batch;
}

Vector QuadraticProblem::g_value(const Vector& x, const OuterSample& /*xi*/,
                                 const Eigen::Ref<const Vector>& eta) const {
  return x + eta;
}

Vector QuadraticProblem::g_jacobian_t(const Vector& /*x*/, const OuterSample& /*xi*/,
                                      const Eigen::Ref<const Vector>& /*eta*/,
                                      const Vector& v) const {
  return v;
}

double QuadraticProblem::f_value(const OuterSample& xi, const Vector& u) const {
  const Eigen::ArrayXd r = u.array() - shift_of(xi);
  return spec_.kind == QuadraticKind::kSmooth ? r.square().sum() : r.abs().sum();
}

Vector QuadraticProblem::f_grad(const OuterSample& xi, const Vector& u) const {
  const Eigen::ArrayXd r = u.array() - shift_of(xi);
  if (spec_.kind == QuadraticKind::kSmooth) return 2.0 * r.matrix();
  // sign(0) = 0
  return r.unaryExpr([](double z) { return static_cast<double>((z > 0.0) - (z < 0.0)); }).matrix();
}

std::optional<double> QuadraticProblem::true_objective(const Vector& x) const {
  if (x.size() != spec_.d) throw InvalidArgument("true_objective: dimension mismatch");
  if (spec_.kind == QuadraticKind::kSmooth) {
    return (x.array() - spec_.shift.mean()).square().sum() + spec_.d * spec_.shift.variance();
  }
  double total = 0.0;
  for (int i = 0; i < spec_.d; ++i) total += spec_.shift.expected_abs_deviation(x[i]);
  return total;
}

Smoothness QuadraticProblem::smoothness() const {
  return spec_.kind == QuadraticKind::kSmooth ? Smoothness::kLipschitzSmooth
                                              : Smoothness::kLipschitzOnly;
}

ProblemMeta QuadraticProblem::meta() const { return meta_for(Domain::unconstrained()); }

ProblemMeta QuadraticProblem::meta_for(const Domain& domain) const {
  const double d = spec_.d;
  ProblemMeta meta;
  meta.sigma_g = spec_.sigma_inner * std::sqrt(d);
  if (spec_.kind == QuadraticKind::kNonsmooth) {
    meta.L_f = std::sqrt(d);
    meta.mu = 0.0;
    meta.M = std::sqrt(d);
    return meta;
  }
  meta.S = 2.0;
  meta.mu = 2.0;
  // Largest distance from the domain to E[y] 1.
  const double ybar = spec_.shift.mean();
  double radius = std::numeric_limits<double>::infinity();
  if (domain.kind() == Domain::Kind::kBox) {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < domain.lower().size(); ++i) {
      const double far = std::max(std::abs(domain.lower()[i] - ybar), std::abs(domain.upper()[i] - ybar));
      sq += far * far;
    }
    radius = std::sqrt(sq);
  } else if (domain.kind() == Domain::Kind::kBall) {
    radius = (domain.center().array() - ybar).matrix().norm() + domain.radius();
  }
  if (std::isfinite(radius)) {
    // E||2(x + eta_bar - y)||^2 <= 4 (R^2 + d Var y + d sigma^2), the worst case m = 1.
    const double sigma2 = spec_.sigma_inner * spec_.sigma_inner;
    meta.M = 2.0 * std::sqrt(radius * radius + d * spec_.shift.variance() + d * sigma2);
  }
  return meta;
}

Vector QuadraticProblem::minimizer() const {
  const double c = spec_.kind == QuadraticKind::kSmooth ? spec_.shift.mean() : spec_.shift.median();
  return Vector::Constant(spec_.d, c);
}

double QuadraticProblem::optimal_value() const { return *true_objective(minimizer()); }

double QuadraticProblem::closed_form_bias(const Vector& x, int m) const {
  require(m >= 1, "closed_form_bias: m must be >= 1");
  require(x.size() == spec_.d, "closed_form_bias: dimension mismatch");
  const double s = spec_.sigma_inner / std::sqrt(static_cast<double>(m));
  if (spec_.kind == QuadraticKind::kSmooth) return spec_.d * s * s;
  if (spec_.shift.kind != ShiftLaw::Kind::kConstant) {
    throw UnsupportedOperation("closed_form_bias: nonsmooth kind needs a constant shift law");
  }
  double gap = 0.0;
  for (int i = 0; i < spec_.d; ++i) {
    const double c = x[i] - spec_.shift.a;
    gap += folded_normal_mean(c, s) - std::abs(c);
  }
  return gap;
}

Vector QuadraticProblem::g_mean(const Vector& x, const OuterSample& /*xi*/,
                                const InnerBatch& batch) const {
  return x + batch.samples.rowwise().mean();
}

Vector QuadraticProblem::g_mean_jacobian_t(const Vector& /*x*/, const OuterSample& /*xi*/,
                                           const InnerBatch& /*batch*/, const Vector& v) const {
  return v;
}

InnerBatch QuadraticProblem::summarize(const OuterSample& /*xi*/, const InnerBatch& batch) const {
  InnerBatch out;
  out.samples = batch.samples.rowwise().mean();
  return out;
}

std::shared_ptr<const QuadraticProblem> make_quadratic(const QuadraticCsoSpec& spec) {
  return std::make_shared<const QuadraticProblem>(spec);
}

}  // namespace bsgd
