#include <cmath>

#include "bsgd/cso.hpp"
#include "common.hpp"
#include "experiments.hpp"
#include "parallel.hpp"

namespace bsgd::cli {

ExperimentResult run_bias_sweep(const Config& config, const RunContext& context) {
  const auto problem = make_quadratic(quadratic_spec(config));
  const Vector x = broadcast(config.get_reals("problem.x"), problem->dim_x(), "problem.x");
  const auto ms = positive_ints(config.get_ints("sweep.m_list"), "sweep.m_list");
  const long n_mc = static_cast<long>(config.get_int("sweep.n_mc"));
  const auto seeds = config.seeds();

  struct Task {
    std::uint64_t seed;
    int m;
  };
  std::vector<Task> tasks;
  for (auto s : seeds) {
    for (int m : ms) tasks.push_back({s, m});
  }
  std::vector<std::vector<Cell>> rows(tasks.size());
  std::vector<double> gaps(tasks.size(), std::nan(""));

  parallel_for(tasks.size(), context.jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    Cell bound, closed;
    if (auto b = bias_bound(problem->meta(), problem->smoothness(), task.m)) bound = *b;
    try {
      closed = problem->closed_form_bias(x, task.m);
    } catch (const UnsupportedOperation&) {
    }
    try {
      RngStreams rng(run_seed(config, coords("bias_sweep m=%d", task.m), task.seed));
      const BiasEstimate est = estimate_bias(*problem, x, task.m, n_mc, rng);
      gaps[i] = est.mean_gap;
      rows[i] = {static_cast<long long>(i), static_cast<long long>(task.seed), static_cast<long long>(task.m),
                 est.mean_gap, est.std_err, static_cast<long long>(est.n_mc), bound, closed, "ok", ""};
    } catch (const std::exception& e) {
      rows[i] = {static_cast<long long>(i), static_cast<long long>(task.seed), static_cast<long long>(task.m),
                 Cell{}, Cell{}, static_cast<long long>(n_mc), bound, closed, error_status(e), e.what()};
    }
  });

  ExperimentResult result;
  Table runs{"bias_sweep",
             {"run_id", "seed", "m", "mean_gap", "std_err", "n_mc", "predicted_bound", "closed_form", "status",
              "message"},
             {}};
  for (auto& r : rows) {
    if (std::get<std::string>(r[8]) != "ok") ++result.failed_runs;
    runs.add(std::move(r));
  }

  Table fit{"bias_sweep_fit", {"seed", "slope", "intercept", "r2", "points", "status", "message"}, {}};
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    std::vector<std::pair<double, double>> points;
    for (std::size_t j = 0; j < ms.size(); ++j) {
      const double g = gaps[k * ms.size() + j];
      if (std::isfinite(g)) points.emplace_back(ms[j], g);
    }
    try {
      const SlopeFit f = fit_loglog_slope(points);
      fit.add({static_cast<long long>(seeds[k]), f.slope, f.intercept, f.r2,
               static_cast<long long>(points.size()), "ok", ""});
    } catch (const std::exception& e) {
      fit.add({static_cast<long long>(seeds[k]), Cell{}, Cell{}, Cell{}, static_cast<long long>(points.size()),
               error_status(e), e.what()});
    }
  }
  result.tables = {std::move(runs), std::move(fit)};
  return result;
}

}  // namespace bsgd::cli
