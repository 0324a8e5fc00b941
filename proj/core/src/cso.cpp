#include "bsgd/cso.hpp"

#include <cmath>
#include <sstream>

namespace bsgd {

Vector CsoProblem::g_mean(const Vector& x, const OuterSample& xi, const InnerBatch& batch) const {
  Vector acc = Vector::Zero(dim_inner());
  for (int j = 0; j < batch.size(); ++j) acc += g_value(x, xi, batch.samples.col(j));
  return acc / static_cast<double>(batch.size());
}

Vector CsoProblem::g_mean_jacobian_t(const Vector& x, const OuterSample& xi,
                                     const InnerBatch& batch, const Vector& v) const {
  Vector acc = Vector::Zero(dim_x());
  for (int j = 0; j < batch.size(); ++j) acc += g_jacobian_t(x, xi, batch.samples.col(j), v);
  return acc / static_cast<double>(batch.size());
}

namespace {

void check_finite(const Vector& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << "non-finite " << what << " at component " << i << " (value " << v[i] << ")";
      throw NonFiniteError(os.str());
    }
  }
}

void check_batch(const CsoProblem& p, const Vector& x, const InnerBatch& batch) {
  if (batch.size() < 1) throw InvalidArgument("inner batch must be nonempty");
  if (x.size() != p.dim_x()) throw InvalidArgument("x has wrong dimension");
}

}  // namespace

double estimate_value(const CsoProblem& p, const Vector& x, const OuterSample& xi,
                      const InnerBatch& batch) {
  check_batch(p, x, batch);
  const Vector u = p.g_mean(x, xi, batch);
  check_finite(u, "inner mean");
  const double value = p.f_value(xi, u);
  if (!std::isfinite(value)) throw NonFiniteError("non-finite outer value f_xi(u)");
  return value;
}

Vector estimate_gradient(const CsoProblem& p, const Vector& x, const OuterSample& xi,
                         const InnerBatch& batch) {
  check_batch(p, x, batch);
  const Vector u = p.g_mean(x, xi, batch);
  check_finite(u, "inner mean");
  const Vector outer = p.f_grad(xi, u);
  check_finite(outer, "outer gradient");
  Vector grad = p.g_mean_jacobian_t(x, xi, batch, outer);
  check_finite(grad, "gradient estimate");
  return grad;
}

BiasEstimate estimate_bias(const CsoProblem& p, const Vector& x, int m, long n_mc,
                           RngStreams& rng) {
  require(m >= 1, "estimate_bias: m must be >= 1");
  require(n_mc >= 1, "estimate_bias: n_mc must be >= 1");
  const auto reference = p.true_objective(x);
  if (!reference) {
    throw UnsupportedOperation("estimate_bias: problem '" + p.name() +
                               "' has no true objective");
  }
  // Welford accumulation of F_hat - F(x).
  double mean = 0.0;
  double m2 = 0.0;
  for (long i = 0; i < n_mc; ++i) {
    const OuterSample xi = p.sample_outer(rng.outer);
    const InnerBatch batch = p.sample_inner(xi, m, rng.inner);
    const double gap = estimate_value(p, x, xi, batch) - *reference;
    const double delta = gap - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (gap - mean);
  }
  BiasEstimate out;
  out.m = m;
  out.mean_gap = mean;
  out.n_mc = n_mc;
  out.std_err = n_mc > 1 ? std::sqrt(m2 / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc))
                         : 0.0;
  return out;
}

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  require(points.size() >= 3, "fit_loglog_slope: need at least 3 points");
  const double n = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  std::vector<std::pair<double, double>> logs;
  logs.reserve(points.size());
  for (const auto& [key, value] : points) {
    if (!(key > 0.0) || !(value > 0.0)) {
      throw InvalidArgument("fit_loglog_slope: keys and values must be positive");
    }
    logs.emplace_back(std::log(key), std::log(value));
    sx += logs.back().first;
    sy += logs.back().second;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [lx, ly] : logs) {
    sxx += (lx - mx) * (lx - mx);
    sxy += (lx - mx) * (ly - my);
    syy += (ly - my) * (ly - my);
  }
  if (sxx == 0.0) throw InvalidArgument("fit_loglog_slope: keys must not all be equal");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

std::optional<double> bias_bound(const ProblemMeta& meta, Smoothness smoothness, int m) {
  require(m >= 1, "bias_bound: m must be >= 1");
  if (!meta.sigma_g) return std::nullopt;
  const double sigma = *meta.sigma_g;
  if (smoothness == Smoothness::kLipschitzSmooth) {
    if (!meta.S) return std::nullopt;
    return *meta.S * sigma * sigma / (2.0 * m);
  }
  if (!meta.L_f) return std::nullopt;
  return *meta.L_f * sigma / std::sqrt(static_cast<double>(m));
}

}  // namespace bsgd
