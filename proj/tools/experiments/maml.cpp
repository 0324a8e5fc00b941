#include <cmath>
#include <limits>

#include "bsgd/baselines.hpp"
#include "bsgd/diagnostics.hpp"
#include "common.hpp"
#include "experiments.hpp"
#include "parallel.hpp"

namespace bsgd::cli {

ExperimentResult run_maml(const Config& config, const RunContext& context) {
  MamlSineSpec spec;
  spec.alpha = config.get_real("problem.alpha");
  spec.query_size = static_cast<int>(config.get_int("problem.query_size"));
  spec.net_dims = positive_ints(config.get_ints("problem.net"), "problem.net");
  spec.reference_tasks = static_cast<long>(config.get_int("problem.reference_tasks"));
  spec.reference_query = static_cast<long>(config.get_int("problem.reference_query"));
  spec.reference_support = static_cast<long>(config.get_int("problem.reference_support"));
  spec.reference_seed = static_cast<std::uint64_t>(config.get_int("problem.reference_seed"));
  const auto problem = make_maml_sine(spec);
  // The objective does not depend on the query size, only the gradient noise does.
  MamlSineSpec probe_spec = spec;
  probe_spec.query_size = static_cast<int>(config.get_int("sweep.moreau_query"));
  const auto probe = make_maml_sine(probe_spec);

  const auto ms = positive_ints(config.get_ints("sweep.m_list"), "sweep.m_list");
  const auto& methods = config.get_strings("sweep.methods");
  require(!methods.empty(), "sweep.methods is empty");
  const auto& grid = config.get_reals("sweep.c_grid");
  const auto& lrs = config.get_reals("sweep.adam_lr_list");
  const long Q = static_cast<long>(config.get_int("sweep.budget"));
  const bool moreau = config.get_bool("sweep.moreau");
  MoreauConfig mcfg;
  mcfg.lambda = config.get_real("sweep.moreau_lambda");
  mcfg.prox_iters = static_cast<int>(config.get_int("sweep.moreau_iters"));
  mcfg.prox_samples = static_cast<int>(config.get_int("sweep.moreau_samples"));
  mcfg.prox_outer = static_cast<int>(config.get_int("sweep.moreau_outer"));
  const auto seeds = config.seeds();
  const int outer_batch = static_cast<int>(config.get_int("engine.outer_batch"));

  // Shared per seed: the initial network and its objective.
  std::vector<Vector> init(seeds.size());
  std::vector<double> init_obj(seeds.size());
  std::vector<double> init_map(seeds.size(), std::nan(""));
  parallel_for(seeds.size(), context.jobs, [&](std::size_t k) {
    Engine rng(run_seed(config, "maml init", seeds[k]));
    init[k] = problem->initial_weights(rng);
    init_obj[k] = *problem->true_objective(init[k]);
    if (moreau) {
      RngStreams mrng(run_seed(config, "maml moreau", seeds[k]));
      init_map[k] = moreau_grad_mapping(*probe, init[k], mcfg, mrng).value;
    }
  });

  struct Task {
    std::string method;
    int m;
    double hyper;
    std::size_t seed_index;
  };
  std::vector<Task> tasks;
  for (const auto& method : methods) {
    const auto& hypers = method == "adam" ? lrs : grid;
    require(!hypers.empty(), "sweep: empty hyperparameter list for " + method);
    for (int m : ms) {
      for (double h : hypers) {
        for (std::size_t k = 0; k < seeds.size(); ++k) tasks.push_back({method, m, h, k});
      }
    }
  }
  std::vector<std::vector<Cell>> rows(tasks.size());
  std::vector<double> objective(tasks.size(), std::nan(""));

  parallel_for(tasks.size(), context.jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const std::uint64_t seed = seeds[task.seed_index];
    std::vector<Cell> row = {task.method, static_cast<long long>(task.m), task.hyper, static_cast<long long>(seed)};
    try {
      const long T = budget_iterations(Q, task.m, outer_batch);
      RunConfig rc = engine_config(config, init[task.seed_index], T, task.m, task.hyper);
      rc.trace_every = T;
      rc.seed = run_seed(config, coords("maml %s m=%d h=%.17g", task.method.c_str(), task.m, task.hyper), seed);
      RunOptions opts;
      if (task.method == "fo_maml") opts.gradient = fo_maml_gradient;
      if (task.method == "adam") opts.adam = AdamState::zeros(problem->dim_x(), task.hyper);
      const RunTrace trace = bsgd_run(*problem, rc, opts);
      const Vector w = evaluated_point(config, trace);
      const double obj = *problem->true_objective(w);
      if (!std::isfinite(obj)) throw NonFiniteError("objective is not finite");
      objective[i] = obj;
      Cell map_init, map_out;
      if (moreau) {
        RngStreams mrng(run_seed(config, "maml moreau", seed));
        map_init = init_map[task.seed_index];
        map_out = moreau_grad_mapping(*probe, w, mcfg, mrng).value;
      }
      row.insert(row.end(), {static_cast<long long>(T), static_cast<long long>(trace.total_samples),
                             init_obj[task.seed_index], obj, map_init, map_out, "ok", ""});
    } catch (const std::exception& e) {
      row.insert(row.end(), {Cell{}, Cell{}, init_obj[task.seed_index], Cell{}, Cell{}, Cell{}, error_status(e),
                             e.what()});
    }
    rows[i] = std::move(row);
  });

  ExperimentResult result;
  Table runs{"maml_runs",
             {"method", "m", "hyper", "seed", "T", "samples", "initial_objective", "objective",
              "grad_mapping_initial", "grad_mapping", "status", "message"},
             {}};
  for (auto& r : rows) {
    if (std::get<std::string>(r[10]) != "ok") ++result.failed_runs;
    runs.add(std::move(r));
  }

  Table summary{"maml_summary", {"method", "m", "best_hyper", "mean_objective", "std_err", "runs"}, {}};
  Table wide{"maml_table", {"m"}, {}};
  for (const auto& method : methods) wide.columns.push_back(method);
  std::vector<std::vector<Cell>> wide_rows(ms.size());
  for (std::size_t j = 0; j < ms.size(); ++j) wide_rows[j] = {static_cast<long long>(ms[j])};
  std::size_t i = 0;
  for (const auto& method : methods) {
    const auto& hypers = method == "adam" ? lrs : grid;
    for (std::size_t j = 0; j < ms.size(); ++j) {
      MeanSe best{std::numeric_limits<double>::infinity(), 0.0, 0};
      double best_h = std::nan("");
      for (double h : hypers) {
        std::vector<double> vals;
        for (std::size_t k = 0; k < seeds.size(); ++k, ++i) {
          if (std::isfinite(objective[i])) vals.push_back(objective[i]);
        }
        const MeanSe agg = mean_se(vals);
        if (agg.n == static_cast<long>(seeds.size()) && agg.mean < best.mean) {
          best = agg;
          best_h = h;
        }
      }
      summary.add({method, static_cast<long long>(ms[j]), best_h, best.mean, best.std_err,
                   static_cast<long long>(best.n)});
      wide_rows[j].push_back(best.mean);
    }
  }
  for (auto& r : wide_rows) wide.add(std::move(r));
  result.tables = {std::move(runs), std::move(summary), std::move(wide)};
  return result;
}

}  // namespace bsgd::cli
