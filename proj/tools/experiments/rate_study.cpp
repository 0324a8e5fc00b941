#include <cmath>
#include <map>

#include "bsgd/diagnostics.hpp"
#include "common.hpp"
#include "experiments.hpp"
#include "parallel.hpp"

namespace bsgd::cli {

namespace {

Theorem theorem_for(const Config& config) {
  const std::string& name = config.get_string("sweep.theorem");
  if (name == "strongly_convex") return Theorem::kStronglyConvex;
  if (name == "convex") return Theorem::kConvex;
  if (name == "weakly_convex") return Theorem::kWeaklyConvex;
  return config.get_string("engine.step") == "strongly_convex" ? Theorem::kStronglyConvex : Theorem::kConvex;
}

}  // namespace

ExperimentResult run_rate_study(const Config& config, const RunContext& context) {
  const auto problem = make_quadratic(quadratic_spec(config));
  const int d = problem->dim_x();
  const Vector x1 = broadcast(config.get_reals("engine.x1"), d, "engine.x1");
  const Domain domain = domain_from(config, d);
  std::vector<long> Ts;
  for (long long T : config.get_ints("sweep.T_list")) {
    require(T >= 1, "sweep.T_list: values must be >= 1");
    Ts.push_back(static_cast<long>(T));
  }
  require(!Ts.empty(), "sweep.T_list is empty");
  const auto ms = positive_ints(config.get_ints("sweep.m_list"), "sweep.m_list");
  const auto& cs = config.get_reals("sweep.c_list");
  require(!cs.empty(), "sweep.c_list is empty");
  const auto seeds = config.seeds();

  struct Task {
    long T;
    int m;
    double c;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (long T : Ts) {
    for (int m : ms) {
      for (double c : cs) {
        for (auto s : seeds) tasks.push_back({T, m, c, s});
      }
    }
  }

  struct Outcome {
    std::vector<std::vector<Cell>> trace_rows;
    std::vector<Cell> final_row;
    double gap = std::nan("");
  };
  std::vector<Outcome> out(tasks.size());

  parallel_for(tasks.size(), context.jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const auto id = static_cast<long long>(i);
    const auto seed = static_cast<long long>(task.seed);
    try {
      RunConfig rc = engine_config(config, x1, task.T, task.m, task.c);
      rc.seed = run_seed(config, coords("rate_study T=%ld m=%d c=%.17g", task.T, task.m, task.c), task.seed);
      const RunTrace trace = bsgd_run(*problem, rc);
      for (std::size_t k = 0; k < trace.iterates.size(); ++k) {
        const long t = trace.iterates[k].first;
        out[i].trace_rows.push_back(
            {id, seed, static_cast<long long>(task.T), static_cast<long long>(task.m), task.c,
             static_cast<long long>(t), static_cast<long long>(trace.samples_cumulative[k].second),
             trace.gamma_history[static_cast<std::size_t>(t - 1)],
             static_cast<long long>(inner_batch_size(rc.batch, t)), suboptimality(*problem, trace.iterates[k].second),
             suboptimality(*problem, trace.running_average[k].second)});
      }
      out[i].gap = suboptimality(*problem, evaluated_point(config, trace));
      out[i].final_row = {id, seed, static_cast<long long>(task.T), static_cast<long long>(task.m), task.c,
                          out[i].gap, static_cast<long long>(trace.total_samples), "ok", ""};
    } catch (const std::exception& e) {
      out[i].final_row = {id, seed, static_cast<long long>(task.T), static_cast<long long>(task.m), task.c,
                          Cell{}, Cell{}, error_status(e), e.what()};
    }
  });

  ExperimentResult result;
  Table trace_table{"rate_study",
                    {"run_id", "seed", "T", "m", "c", "t", "samples_cumulative", "gamma_t", "m_t", "suboptimality",
                     "avg_suboptimality"},
                    {}};
  Table final_table{"rate_study_final",
                    {"run_id", "seed", "T", "m", "c", "suboptimality", "total_samples", "status", "message"},
                    {}};
  for (auto& o : out) {
    for (auto& r : o.trace_rows) trace_table.add(std::move(r));
    if (std::get<std::string>(o.final_row[7]) != "ok") ++result.failed_runs;
    final_table.add(std::move(o.final_row));
  }

  // Aggregate over seeds: one bound report per (T, m, c).
  const Theorem theorem = theorem_for(config);
  const ProblemMeta meta = problem->meta_for(domain);
  Table bounds{"rate_study_bounds",
               {"T", "m", "c", "theorem", "label", "seeds", "observed_gap", "std_err", "optimization_term", "bias_term",
                "predicted_bound", "holds", "status", "message"},
               {}};
  std::map<std::pair<int, double>, std::vector<std::pair<double, double>>> curves;
  for (std::size_t start = 0; start < tasks.size(); start += seeds.size()) {
    const Task& task = tasks[start];
    std::vector<double> gaps;
    for (std::size_t k = start; k < start + seeds.size(); ++k) {
      if (std::isfinite(out[k].gap)) gaps.push_back(out[k].gap);
    }
    const MeanSe agg = mean_se(gaps);
    const auto T = static_cast<long long>(task.T);
    const auto m = static_cast<long long>(task.m);
    if (gaps.empty()) {
      bounds.add({T, m, task.c, to_string(theorem), Cell{}, 0LL, Cell{}, Cell{}, Cell{}, Cell{}, Cell{}, Cell{},
                  "error", "no successful runs"});
      continue;
    }
    curves[{task.m, task.c}].emplace_back(static_cast<double>(task.T), agg.mean);
    try {
      RunSummary run;
      run.T = task.T;
      run.batch = engine_config(config, x1, task.T, task.m, task.c).batch;
      run.c = task.c;
      run.observed_gap = agg.mean;
      run.seeds = static_cast<int>(agg.n);
      run.D = (x1 - problem->minimizer()).norm();
      const GapReport rep = bound_report(meta, problem->smoothness(), run, theorem);
      bounds.add({T, m, task.c, rep.theorem_name, rep.label, static_cast<long long>(rep.seeds), rep.observed_gap,
                  agg.std_err, rep.optimization_term, rep.bias_term, rep.predicted_bound,
                  static_cast<long long>(rep.holds), "ok", ""});
    } catch (const std::exception& e) {
      bounds.add({T, m, task.c, to_string(theorem), Cell{}, static_cast<long long>(agg.n), agg.mean, agg.std_err,
                  Cell{}, Cell{}, Cell{}, Cell{}, error_status(e), e.what()});
    }
  }

  Table fit{"rate_study_fit", {"m", "c", "slope", "r2", "points", "status", "message"}, {}};
  for (const auto& [key, points] : curves) {
    try {
      const SlopeFit f = fit_loglog_slope(points);
      fit.add({static_cast<long long>(key.first), key.second, f.slope, f.r2, static_cast<long long>(points.size()),
               "ok", ""});
    } catch (const std::exception& e) {
      fit.add({static_cast<long long>(key.first), key.second, Cell{}, Cell{}, static_cast<long long>(points.size()),
               error_status(e), e.what()});
    }
  }
  result.tables = {std::move(trace_table), std::move(final_table), std::move(bounds), std::move(fit)};
  return result;
}

}  // namespace bsgd::cli
