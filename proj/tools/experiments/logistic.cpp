#include <cmath>
#include <limits>

#include "bsgd/baselines.hpp"
#include "bsgd/diagnostics.hpp"
#include "common.hpp"
#include "experiments.hpp"
#include "parallel.hpp"

namespace bsgd::cli {

namespace {

InvariantLogisticSpec logistic_spec(const Config& config, double sigma2_sq) {
  InvariantLogisticSpec spec;
  const long long d = config.get_int("problem.d");
  require(d >= 1 && d <= 100000, "problem.d must be a positive integer");
  spec.d = static_cast<int>(d);
  spec.sigma1_sq = config.get_real("problem.sigma1_sq");
  spec.sigma2_sq = sigma2_sq;
  spec.w_true_seed = static_cast<std::uint64_t>(config.get_int("problem.w_true_seed"));
  spec.reference_size = static_cast<long>(config.get_int("problem.reference_size"));
  spec.reference_seed = static_cast<std::uint64_t>(config.get_int("problem.reference_seed"));
  return spec;
}

}  // namespace

ExperimentResult run_logistic(const Config& config, const RunContext& context) {
  const auto& sigmas = config.get_reals("sweep.sigma2_sq_list");
  require(!sigmas.empty(), "sweep.sigma2_sq_list is empty");
  const auto ms = positive_ints(config.get_ints("sweep.m_list"), "sweep.m_list");
  const auto& grid = config.get_reals("sweep.c_grid");
  require(!grid.empty(), "sweep.c_grid is empty");
  const long Q = static_cast<long>(config.get_int("sweep.budget"));
  const bool with_saa = config.get_bool("sweep.saa");
  SaaOptions saa_opts;
  saa_opts.tol = config.get_real("sweep.saa_tol");
  saa_opts.max_iters = static_cast<long>(config.get_int("sweep.saa_max_iters"));
  const auto seeds = config.seeds();
  const int outer_batch = static_cast<int>(config.get_int("engine.outer_batch"));

  std::vector<std::shared_ptr<const InvariantLogisticProblem>> problems;
  for (double s2 : sigmas) problems.push_back(make_invariant_logistic(logistic_spec(config, s2)));
  const int d = problems.front()->dim_x();
  const Vector x1 = broadcast(config.get_reals("engine.x1"), d, "engine.x1");

  // Reference minimizer of the noiseless objective; it does not depend on sigma2^2.
  const auto ref_outer = problems.front()->reference_samples();
  std::vector<InnerBatch> ref_inner;
  ref_inner.reserve(ref_outer.size());
  for (const auto& s : ref_outer) ref_inner.push_back(InnerBatch{s.payload.head(d)});
  const SaaResult ref = saa_solve(make_saa_instance(problems.front(), ref_outer, ref_inner), Vector::Zero(d), saa_opts);
  const double f_ref = *problems.front()->true_objective(ref.x);

  struct Task {
    std::size_t sigma;
    int m;
    bool saa;
    double c;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    for (int m : ms) {
      for (double c : grid) {
        for (auto s : seeds) tasks.push_back({k, m, false, c, s});
      }
      if (with_saa) {
        for (auto s : seeds) tasks.push_back({k, m, true, std::nan(""), s});
      }
    }
  }
  std::vector<std::vector<Cell>> rows(tasks.size());
  std::vector<double> gaps(tasks.size(), std::nan(""));

  parallel_for(tasks.size(), context.jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const auto& problem = *problems[task.sigma];
    const double s2 = sigmas[task.sigma];
    const Cell c_cell = task.saa ? Cell{} : Cell{task.c};
    std::vector<Cell> head = {s2, static_cast<long long>(task.m), std::string(task.saa ? "saa" : "bsgd"), c_cell,
                              static_cast<long long>(task.seed)};
    try {
      Vector x;
      Cell T;
      long long samples = 0;
      Cell converged, grad_norm;
      if (task.saa) {
        const long n = std::max(1L, Q / (task.m + 1));
        RngStreams rng(run_seed(config, coords("logistic saa sigma2_sq=%.17g m=%d", s2, task.m), task.seed));
        const SaaResult res = saa_solve(make_saa_instance(problems[task.sigma], n, task.m, rng), x1, saa_opts);
        x = res.x;
        samples = static_cast<long long>(n) * (task.m + 1);
        converged = static_cast<long long>(res.converged);
        grad_norm = res.grad_norm;
      } else {
        const long iters = budget_iterations(Q, task.m, outer_batch);
        RunConfig rc = engine_config(config, x1, iters, task.m, task.c);
        rc.trace_every = iters;
        rc.seed = run_seed(config, coords("logistic bsgd sigma2_sq=%.17g m=%d c=%.17g", s2, task.m, task.c),
                           task.seed);
        const RunTrace trace = bsgd_run(problem, rc);
        x = evaluated_point(config, trace);
        T = static_cast<long long>(iters);
        samples = trace.total_samples;
      }
      const double gap = *problem.true_objective(x) - f_ref;
      if (!std::isfinite(gap)) throw NonFiniteError("gap is not finite");
      gaps[i] = gap;
      head.insert(head.end(), {T, samples, gap, converged, grad_norm, "ok", ""});
    } catch (const std::exception& e) {
      head.insert(head.end(), {Cell{}, Cell{}, Cell{}, Cell{}, Cell{}, error_status(e), e.what()});
    }
    rows[i] = std::move(head);
  });

  ExperimentResult result;
  Table runs{"logistic_runs",
             {"sigma2_sq", "m", "method", "c", "seed", "T", "samples", "gap", "saa_converged", "saa_grad_norm",
              "status", "message"},
             {}};
  for (auto& r : rows) {
    if (std::get<std::string>(r[10]) != "ok") ++result.failed_runs;
    runs.add(std::move(r));
  }

  // Best stepsize per (sigma2^2, m) by mean gap over seeds.
  Table summary{"logistic_summary", {"sigma2_sq", "m", "method", "best_c", "mean_gap", "std_err", "runs"}, {}};
  struct Best {
    double gap = std::numeric_limits<double>::infinity();
    int m = 0;
  };
  std::vector<Best> best_bsgd(sigmas.size()), best_saa(sigmas.size());
  std::vector<std::vector<double>> table_bsgd(sigmas.size()), table_saa(sigmas.size());
  std::size_t i = 0;
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    for (int m : ms) {
      MeanSe best{std::numeric_limits<double>::infinity(), 0.0, 0};
      double best_c = std::nan("");
      for (double c : grid) {
        std::vector<double> vals;
        for (std::size_t s = 0; s < seeds.size(); ++s, ++i) {
          if (std::isfinite(gaps[i])) vals.push_back(gaps[i]);
        }
        const MeanSe agg = mean_se(vals);
        if (agg.n == static_cast<long>(seeds.size()) && agg.mean < best.mean) {
          best = agg;
          best_c = c;
        }
      }
      summary.add({sigmas[k], static_cast<long long>(m), "bsgd", best_c, best.mean, best.std_err,
                   static_cast<long long>(best.n)});
      table_bsgd[k].push_back(best.mean);
      if (best.mean < best_bsgd[k].gap) best_bsgd[k] = {best.mean, m};
      if (with_saa) {
        std::vector<double> vals;
        for (std::size_t s = 0; s < seeds.size(); ++s, ++i) {
          if (std::isfinite(gaps[i])) vals.push_back(gaps[i]);
        }
        const MeanSe agg = mean_se(vals);
        summary.add({sigmas[k], static_cast<long long>(m), "saa", Cell{}, agg.mean, agg.std_err,
                     static_cast<long long>(agg.n)});
        table_saa[k].push_back(agg.mean);
        if (agg.mean < best_saa[k].gap) best_saa[k] = {agg.mean, m};
      }
    }
  }

  // Rows m, columns method x sigma2^2.
  Table wide{"logistic_table", {"m"}, {}};
  for (double s2 : sigmas) {
    wide.columns.push_back("bsgd[sigma2_sq=" + format_real(s2) + "]");
    if (with_saa) wide.columns.push_back("saa[sigma2_sq=" + format_real(s2) + "]");
  }
  for (std::size_t j = 0; j < ms.size(); ++j) {
    std::vector<Cell> row = {static_cast<long long>(ms[j])};
    for (std::size_t k = 0; k < sigmas.size(); ++k) {
      row.push_back(table_bsgd[k][j]);
      if (with_saa) row.push_back(table_saa[k][j]);
    }
    wide.add(std::move(row));
  }

  Table best{"logistic_best", {"sigma2_sq", "bsgd_best_m", "bsgd_best_gap", "saa_best_m", "saa_best_gap"}, {}};
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    const bool has_saa = with_saa && best_saa[k].m > 0;
    best.add({sigmas[k], best_bsgd[k].m > 0 ? Cell{static_cast<long long>(best_bsgd[k].m)} : Cell{},
              best_bsgd[k].m > 0 ? Cell{best_bsgd[k].gap} : Cell{},
              has_saa ? Cell{static_cast<long long>(best_saa[k].m)} : Cell{}, has_saa ? Cell{best_saa[k].gap} : Cell{}});
  }

  result.notes.push_back({"reference_objective", format_real(f_ref)});
  result.notes.push_back({"reference_grad_norm", format_real(ref.grad_norm)});
  result.notes.push_back({"reference_converged", ref.converged ? "true" : "false"});
  result.tables = {std::move(runs), std::move(summary), std::move(wide), std::move(best)};
  return result;
}

}  // namespace bsgd::cli
