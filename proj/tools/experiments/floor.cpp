#include <cmath>

#include "bsgd/lower_bound.hpp"
#include "common.hpp"
#include "experiments.hpp"
#include "parallel.hpp"

namespace bsgd::cli {

ExperimentResult run_floor(const Config& config, const RunContext& context) {
  FloorConfig base;
  base.variant = config.get_string("problem.variant") == "strongly_convex" ? HardVariant::kStronglyConvex
                                                                           : HardVariant::kConvexAbs;
  base.V = config.get_real("problem.V");
  base.alpha.kind = config.get_string("problem.alpha_rule") == "boundary" ? AlphaRule::Kind::kBoundary
                                                                          : AlphaRule::Kind::kProportional;
  base.alpha.factor = config.get_real("problem.alpha_factor");
  base.x1 = config.get_real("problem.x1");
  base.step_grid = config.get_reals("sweep.c_grid");
  base.seed_indices = config.seeds();
  require(!base.seed_indices.empty(), "seeds must be nonempty");
  const auto& Bs = config.get_reals("sweep.B_list");
  const auto& Ts = config.get_ints("sweep.T_list");
  require(!Bs.empty() && !Ts.empty(), "sweep.B_list and sweep.T_list must be nonempty");

  struct Task {
    long T;
    double B;
  };
  std::vector<Task> tasks;
  for (long long T : Ts) {
    for (double B : Bs) tasks.push_back({static_cast<long>(T), B});
  }
  std::vector<std::vector<Cell>> rows(tasks.size());
  std::vector<FloorRow> results(tasks.size());
  std::vector<bool> ok(tasks.size(), false);

  parallel_for(tasks.size(), context.jobs, [&](std::size_t i) {
    FloorConfig cfg = base;
    cfg.T = tasks[i].T;
    cfg.B_list = {tasks[i].B};
    try {
      const FloorRow r = floor_experiment(cfg, config.root_seed()).front();
      results[i] = r;
      ok[i] = true;
      rows[i] = {static_cast<long long>(r.T), r.B, r.alpha, r.best_c, r.mean_error, r.std_err,
                 static_cast<long long>(r.runs), "ok", ""};
    } catch (const std::exception& e) {
      rows[i] = {static_cast<long long>(tasks[i].T), tasks[i].B, Cell{}, Cell{}, Cell{}, Cell{}, Cell{},
                 error_status(e), e.what()};
    }
  });

  ExperimentResult result;
  Table table{"floor", {"T", "B", "alpha", "best_c", "mean_error", "std_err", "runs", "status", "message"}, {}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!ok[i]) ++result.failed_runs;
    table.add(std::move(rows[i]));
  }

  Table summary{"floor_summary", {"T", "correlation", "increasing_within_2se", "status", "message"}, {}};
  for (std::size_t start = 0; start < tasks.size(); start += Bs.size()) {
    std::vector<FloorRow> group;
    for (std::size_t k = start; k < start + Bs.size(); ++k) {
      if (ok[k]) group.push_back(results[k]);
    }
    const auto T = static_cast<long long>(tasks[start].T);
    if (group.size() != Bs.size() || group.size() < 2) {
      summary.add({T, Cell{}, Cell{}, "error", "need at least two successful B values"});
      continue;
    }
    bool increasing = true;
    for (std::size_t k = 1; k < group.size(); ++k) {
      const double tol = 2.0 * std::hypot(group[k].std_err, group[k - 1].std_err);
      if (group[k].B > group[k - 1].B && group[k].mean_error <= group[k - 1].mean_error - tol) increasing = false;
    }
    summary.add({T, floor_correlation(group), static_cast<long long>(increasing), "ok", ""});
  }
  result.tables = {std::move(table), std::move(summary)};
  return result;
}

}  // namespace bsgd::cli
