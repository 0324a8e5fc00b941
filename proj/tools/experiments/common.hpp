#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bsgd/engine.hpp"
#include "bsgd/problems.hpp"
#include "config.hpp"
#include "table.hpp"

namespace bsgd::cli {

/// printf-style coordinates string; use %.17g for reals.
std::string coords(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

std::uint64_t run_seed(const Config& config, const std::string& coordinates, std::uint64_t seed);

/// One value is broadcast to all d coordinates.
Vector broadcast(const std::vector<double>& values, int d, const std::string& what);

std::vector<int> positive_ints(const std::vector<long long>& values, const std::string& what);

Domain domain_from(const Config& config, int d);

/// Engine settings from [engine] with the sweep coordinates filled in.
RunConfig engine_config(const Config& config, const Vector& x1, long T, int m, double c);

/// Iterations for a total sample budget Q: T - 1 updates of outer_batch (m + 1)
/// samples each, so the run consumes between Q - outer_batch (m + 1) and Q samples.
long budget_iterations(long Q, int m, int outer_batch);

/// The point that is scored: policy output or last iterate.
Vector evaluated_point(const Config& config, const RunTrace& trace);

QuadraticCsoSpec quadratic_spec(const Config& config);

std::string error_status(const std::exception& e);

struct MeanSe {
  double mean = 0.0;
  double std_err = 0.0;
  long n = 0;
};
MeanSe mean_se(const std::vector<double>& values);

const std::vector<double>& iv_grid();

}  // namespace bsgd::cli
