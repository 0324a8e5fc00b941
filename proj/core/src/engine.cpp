#include "bsgd/engine.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace bsgd {

Domain Domain::box(Vector lower, Vector upper) {
  require(lower.size() == upper.size(), "box bounds must have equal dimension");
  require((lower.array() <= upper.array()).all(), "box requires lower <= upper");
  Domain d(Kind::kBox);
  d.a_ = std::move(lower);
  d.b_ = std::move(upper);
  return d;
}

Domain Domain::ball(Vector center, double radius) {
  require(radius > 0.0 && std::isfinite(radius), "ball radius must be positive");
  Domain d(Kind::kBall);
  d.a_ = std::move(center);
  d.radius_ = radius;
  return d;
}

bool Domain::contains(const Vector& x, double tol) const {
  switch (kind_) {
    case Kind::kUnconstrained:
      return true;
    case Kind::kBox:
      if (x.size() != a_.size()) return false;
      return ((x.array() >= a_.array() - tol) && (x.array() <= b_.array() + tol)).all();
    case Kind::kBall:
      if (x.size() != a_.size()) return false;
      return (x - a_).norm() <= radius_ + tol;
  }
  return false;
}

Vector project(const Vector& x, const Domain& domain) {
  switch (domain.kind()) {
    case Domain::Kind::kUnconstrained:
      return x;
    case Domain::Kind::kBox:
      if (x.size() != domain.lower().size()) throw InvalidArgument("project: dimension mismatch");
      return x.cwiseMax(domain.lower()).cwiseMin(domain.upper());
    case Domain::Kind::kBall: {
      if (x.size() != domain.center().size()) throw InvalidArgument("project: dimension mismatch");
      const Vector offset = x - domain.center();
      const double dist = offset.norm();
      if (dist <= domain.radius()) return x;
      return domain.center() + offset * (domain.radius() / dist);
    }
  }
  return x;
}

StepSchedule StepSchedule::strongly_convex(double mu) {
  require(mu > 0.0, "strongly convex schedule needs mu > 0");
  StepSchedule s;
  s.kind = Kind::kStronglyConvex;
  s.mu = mu;
  return s;
}

StepSchedule StepSchedule::constant(double c, long T) {
  require(c > 0.0, "constant schedule needs c > 0");
  require(T >= 1, "constant schedule needs T >= 1");
  StepSchedule s;
  s.kind = Kind::kConstant;
  s.c = c;
  s.horizon = T;
  return s;
}

StepSchedule StepSchedule::decaying(double c) {
  require(c > 0.0, "decaying schedule needs c > 0");
  StepSchedule s;
  s.kind = Kind::kDecaying;
  s.c = c;
  return s;
}

double stepsize(const StepSchedule& s, long t) {
  if (t < 1) throw InvalidArgument("stepsize: t must be >= 1");
  switch (s.kind) {
    case StepSchedule::Kind::kStronglyConvex:
      return 1.0 / (s.mu * static_cast<double>(t));
    case StepSchedule::Kind::kConstant:
      return s.c / std::sqrt(static_cast<double>(s.horizon));
    case StepSchedule::Kind::kDecaying:
      return s.c / std::sqrt(static_cast<double>(t));
  }
  return 0.0;
}

BatchSchedule BatchSchedule::fixed(int m) {
  require(m >= 1, "fixed batch schedule needs m >= 1");
  return {Kind::kFixed, m};
}

long inner_batch_size(const BatchSchedule& b, long t) {
  if (t < 1) throw InvalidArgument("inner_batch_size: t must be >= 1");
  switch (b.kind) {
    case BatchSchedule::Kind::kFixed:
      return b.m;
    case BatchSchedule::Kind::kLinear:
      return t;
    case BatchSchedule::Kind::kCeilSqrt: {
      long r = static_cast<long>(std::sqrt(static_cast<double>(t)));
      while (r * r > t) --r;
      while ((r + 1) * (r + 1) <= t) ++r;
      return r * r == t ? r : r + 1;
    }
  }
  return 1;
}

AdamState AdamState::zeros(Eigen::Index dim, double lr) {
  AdamState s;
  s.m1 = Vector::Zero(dim);
  s.m2 = Vector::Zero(dim);
  s.lr = lr;
  return s;
}

std::pair<AdamState, Vector> adam_step(const AdamState& state, const Vector& grad, const Vector& x) {
  require(grad.size() == x.size() && state.m1.size() == x.size() && state.m2.size() == x.size(),
          "adam_step: shape mismatch");
  AdamState next = state;
  next.t = state.t + 1;
  next.m1 = state.beta1 * state.m1 + (1.0 - state.beta1) * grad;
  next.m2 = state.beta2 * state.m2 + (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(next.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(next.t));
  const Eigen::ArrayXd m_hat = next.m1.array() / c1;
  const Eigen::ArrayXd v_hat = next.m2.array() / c2;
  Vector out = x.array() - state.lr * m_hat / (v_hat.sqrt() + state.eps);
  return {std::move(next), std::move(out)};
}

std::vector<double> output_probabilities(const std::vector<double>& gammas, long count,
                                         OutputPolicy policy) {
  require(count >= 1, "output selection needs at least one iterate");
  std::vector<double> probs(static_cast<std::size_t>(count), 1.0 / static_cast<double>(count));
  if (policy == OutputPolicy::kStepsizeWeighted) {
    require(gammas.size() >= static_cast<std::size_t>(count),
            "stepsize-weighted selection needs one gamma per iterate");
    double total = 0.0;
    for (long i = 0; i < count; ++i) total += gammas[static_cast<std::size_t>(i)];
    require(total > 0.0, "stepsize-weighted selection needs positive gammas");
    for (long i = 0; i < count; ++i) probs[static_cast<std::size_t>(i)] = gammas[static_cast<std::size_t>(i)] / total;
  }
  return probs;
}

long select_output_index(const std::vector<double>& gammas, long count, OutputPolicy policy,
                         Engine& rng) {
  require(count >= 1, "output selection needs at least one iterate");
  switch (policy) {
    case OutputPolicy::kAverage:
      return -1;
    case OutputPolicy::kUniformRandom: {
      std::uniform_int_distribution<long> dist(0, count - 1);
      return dist(rng);
    }
    case OutputPolicy::kStepsizeWeighted: {
      const auto probs = output_probabilities(gammas, count, policy);
      std::discrete_distribution<long> dist(probs.begin(), probs.end());
      return dist(rng);
    }
  }
  return -1;
}

Vector select_output(const std::vector<Vector>& iterates, const std::vector<double>& gammas,
                     OutputPolicy policy, Engine& rng) {
  if (iterates.empty()) throw InvalidArgument("select_output: empty iterate list");
  const long count = static_cast<long>(iterates.size());
  if (policy == OutputPolicy::kAverage) {
    Vector acc = Vector::Zero(iterates.front().size());
    for (const auto& x : iterates) acc += x;
    return acc / static_cast<double>(count);
  }
  const long idx = select_output_index(gammas, count, policy, rng);
  return iterates[static_cast<std::size_t>(idx)];
}

namespace {

bool should_record(long t, long T, long every) { return t == T || (t - 1) % every == 0; }

}  // namespace

RunTrace bsgd_run(const CsoProblem& problem, const RunConfig& config, const RunOptions& options) {
  RngStreams rng(config.seed);
  return bsgd_run(problem, config, rng, options);
}

RunTrace bsgd_run(const CsoProblem& problem, const RunConfig& config, RngStreams& rng,
                  const RunOptions& options) {
  require(config.T >= 1, "bsgd_run: T must be >= 1");
  require(config.trace_every >= 1, "bsgd_run: trace_every must be >= 1");
  require(config.outer_batch >= 1, "bsgd_run: outer_batch must be >= 1");
  require(config.x1.size() == problem.dim_x(), "bsgd_run: x1 dimension does not match problem");
  require(config.domain.contains(config.x1), "bsgd_run: x1 must lie in the domain");

  const long T = config.T;
  RunTrace trace;
  trace.gamma_history.reserve(static_cast<std::size_t>(T));
  for (long t = 1; t <= T; ++t) trace.gamma_history.push_back(stepsize(config.step, t));

  // Random output policies pick their index up front so iterates need not be stored.
  const long selected = select_output_index(trace.gamma_history, T, config.output, rng.aux);

  const GradientOracle& oracle = options.gradient;
  std::optional<AdamState> adam = options.adam;
  if (adam && adam->m1.size() != problem.dim_x()) *adam = AdamState::zeros(problem.dim_x(), adam->lr);

  Vector x = config.x1;
  Vector sum = Vector::Zero(x.size());
  long samples = 0;

  for (long t = 1;; ++t) {
    sum += x;
    if (selected == t - 1) trace.output_point = x;
    if (should_record(t, T, config.trace_every)) {
      trace.iterates.emplace_back(t, x);
      trace.running_average.emplace_back(t, sum / static_cast<double>(t));
      trace.samples_cumulative.emplace_back(t, samples);
    }
    if (options.observer) options.observer(t, x);
    if (t == T) break;

    const long m_t = inner_batch_size(config.batch, t);
    Vector grad = Vector::Zero(x.size());
    for (int k = 0; k < config.outer_batch; ++k) {
      const OuterSample xi = problem.sample_outer(rng.outer);
      const InnerBatch batch = problem.sample_inner(xi, static_cast<int>(m_t), rng.inner);
      try {
        grad += oracle ? oracle(problem, x, xi, batch) : estimate_gradient(problem, x, xi, batch);
      } catch (const NonFiniteError& e) {
        std::ostringstream os;
        os << "bsgd_run aborted at t=" << t << ": " << e.what();
        throw NonFiniteError(os.str());
      }
      samples += m_t + 1;
    }
    if (config.outer_batch > 1) grad /= static_cast<double>(config.outer_batch);
    if (!grad.allFinite()) {
      throw NonFiniteError("bsgd_run aborted at t=" + std::to_string(t) +
                           ": non-finite gradient estimate");
    }

    if (adam) {
      auto [next_state, next_x] = adam_step(*adam, grad, x);
      *adam = std::move(next_state);
      x = project(next_x, config.domain);
    } else {
      x = project(x - trace.gamma_history[static_cast<std::size_t>(t - 1)] * grad, config.domain);
    }
  }

  trace.total_samples = samples;
  if (config.output == OutputPolicy::kAverage) {
    trace.output_point = sum / static_cast<double>(T);
    trace.output_index = 0;
  } else {
    trace.output_index = selected + 1;
  }
  return trace;
}

}  // namespace bsgd
