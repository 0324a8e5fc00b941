#include "common.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <typeinfo>

#include "bsgd/baselines.hpp"
#include "bsgd/rng.hpp"

namespace bsgd::cli {

std::string coords(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

std::uint64_t run_seed(const Config& config, const std::string& coordinates, std::uint64_t seed) {
  return derive_seed(config.root_seed(), coordinates, seed);
}

Vector broadcast(const std::vector<double>& values, int d, const std::string& what) {
  if (values.size() == 1) return Vector::Constant(d, values.front());
  if (static_cast<int>(values.size()) != d) {
    throw InvalidArgument(what + ": expected 1 or " + std::to_string(d) + " values, got " +
                          std::to_string(values.size()));
  }
  return Eigen::Map<const Vector>(values.data(), d);
}

std::vector<int> positive_ints(const std::vector<long long>& values, const std::string& what) {
  if (values.empty()) throw InvalidArgument(what + ": list is empty");
  std::vector<int> out;
  for (long long v : values) {
    if (v < 1 || v > 1000000000LL) throw InvalidArgument(what + ": values must be positive integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

Domain domain_from(const Config& config, int d) {
  const std::string& kind = config.get_string("engine.domain");
  if (kind == "box") {
    return Domain::box(Vector::Constant(d, config.get_real("engine.lower")),
                       Vector::Constant(d, config.get_real("engine.upper")));
  }
  if (kind == "ball") return Domain::ball(Vector::Zero(d), config.get_real("engine.radius"));
  return Domain::unconstrained();
}

RunConfig engine_config(const Config& config, const Vector& x1, long T, int m, double c) {
  RunConfig rc;
  rc.T = T;
  const std::string& step = config.get_string("engine.step");
  if (step == "strongly_convex") {
    rc.step = StepSchedule::strongly_convex(config.get_real("engine.mu"));
  } else if (step == "constant") {
    rc.step = StepSchedule::constant(c, T);
  } else {
    rc.step = StepSchedule::decaying(c);
  }
  const std::string& batch = config.get_string("engine.batch");
  if (batch == "linear") {
    rc.batch = BatchSchedule::linear();
  } else if (batch == "ceil_sqrt") {
    rc.batch = BatchSchedule::ceil_sqrt();
  } else {
    rc.batch = BatchSchedule::fixed(m);
  }
  rc.domain = domain_from(config, static_cast<int>(x1.size()));
  rc.x1 = x1;
  const std::string& output = config.get_string("engine.output");
  rc.output = output == "average"          ? OutputPolicy::kAverage
              : output == "uniform_random" ? OutputPolicy::kUniformRandom
                                           : OutputPolicy::kStepsizeWeighted;
  const long every = config.get_int("engine.trace_every");
  rc.trace_every = every > 0 ? every : std::max(1L, T / 100);
  const long long outer = config.get_int("engine.outer_batch");
  require(outer >= 1, "engine.outer_batch must be >= 1");
  rc.outer_batch = static_cast<int>(outer);
  return rc;
}

long budget_iterations(long Q, int m, int outer_batch) {
  require(Q >= 1, "budget must be >= 1");
  return Q / (static_cast<long>(outer_batch) * (m + 1)) + 1;
}

Vector evaluated_point(const Config& config, const RunTrace& trace) {
  if (config.get_string("engine.evaluate") == "last") return trace.iterates.back().second;
  return trace.output_point;
}

QuadraticCsoSpec quadratic_spec(const Config& config) {
  QuadraticCsoSpec spec;
  const long long d = config.get_int("problem.d");
  require(d >= 1 && d <= 1000000, "problem.d must be a positive integer");
  spec.d = static_cast<int>(d);
  spec.sigma_inner = config.get_real("problem.sigma");
  spec.kind = config.get_string("problem.kind") == "nonsmooth" ? QuadraticKind::kNonsmooth : QuadraticKind::kSmooth;
  const double a = config.get_real("problem.shift_a");
  const double b = config.get_real("problem.shift_b");
  const std::string& shift = config.get_string("problem.shift");
  if (shift == "constant") {
    spec.shift = ShiftLaw::constant(a);
  } else if (shift == "normal") {
    spec.shift = ShiftLaw::normal(a, b);
  } else if (shift == "uniform") {
    spec.shift = ShiftLaw::uniform(a, b);
  } else {
    spec.shift = ShiftLaw::two_point(a, b, config.get_real("problem.shift_p"));
  }
  return spec;
}

std::string error_status(const std::exception& e) {
  if (dynamic_cast<const NonFiniteError*>(&e)) return "nonfinite";
  if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid";
  if (dynamic_cast<const UnsupportedOperation*>(&e)) return "unsupported";
  return "error";
}

MeanSe mean_se(const std::vector<double>& values) {
  MeanSe out;
  out.n = static_cast<long>(values.size());
  if (values.empty()) {
    out.mean = std::nan("");
    out.std_err = std::nan("");
    return out;
  }
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(out.n);
  if (out.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std_err = std::sqrt(ss / static_cast<double>(out.n - 1) / static_cast<double>(out.n));
  }
  return out;
}

const std::vector<double>& iv_grid() {
  static const std::vector<double> grid = iv_test_grid();
  return grid;
}

}  // namespace bsgd::cli
