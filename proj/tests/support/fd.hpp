#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "bsgd/common.hpp"

namespace bsgd::testutil {

using ScalarFn = std::function<double(const Vector&)>;
// Returns an opaque region label; finite differences only compare points
// that share the label with the base point (ReLU kinks make the objective
// nondifferentiable across region boundaries).
using RegionFn = std::function<std::vector<std::uint8_t>(const Vector&)>;

/// Central-difference gradient. With a region function, the step for each
/// coordinate is halved until both probes stay in the base point's region.
inline Vector central_gradient(const ScalarFn& fn, const Vector& x, double h,
                               const RegionFn& region = {}) {
  Vector g(x.size());
  const auto base = region ? region(x) : std::vector<std::uint8_t>{};
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double step = h;
    Vector xp = x, xm = x;
    for (int tries = 0; tries < 30; ++tries) {
      xp[i] = x[i] + step;
      xm[i] = x[i] - step;
      if (!region || (region(xp) == base && region(xm) == base)) break;
      step *= 0.5;
    }
    g[i] = (fn(xp) - fn(xm)) / (2.0 * step);
  }
  return g;
}

inline double relative_error(const Vector& got, const Vector& want) {
  const double scale = std::max(want.norm(), 1e-12);
  return (got - want).norm() / scale;
}

inline Vector random_vector(Eigen::Index n, Engine& rng, double sd = 1.0) {
  Vector v(n);
  std::normal_distribution<double> dist(0.0, sd);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

}  // namespace bsgd::testutil
