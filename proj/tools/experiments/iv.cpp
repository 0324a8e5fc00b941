#include <cmath>
#include <limits>

#include "bsgd/baselines.hpp"
#include "common.hpp"
#include "experiments.hpp"
#include "parallel.hpp"

namespace bsgd::cli {

ExperimentResult run_iv(const Config& config, const RunContext& context) {
  const auto& truths = config.get_strings("sweep.truths");
  const auto& methods = config.get_strings("sweep.methods");
  require(!truths.empty() && !methods.empty(), "sweep.truths and sweep.methods must be nonempty");
  const auto net = positive_ints(config.get_ints("problem.net"), "problem.net");
  const long n_train = static_cast<long>(config.get_int("sweep.n_train"));
  const long T = static_cast<long>(config.get_int("sweep.T"));
  const int m = positive_ints({config.get_int("sweep.m")}, "sweep.m").front();
  const auto& grid = config.get_reals("sweep.c_grid");
  const auto& lrs = config.get_reals("sweep.direct_lr_list");
  const auto degrees = positive_ints(config.get_ints("sweep.poly_degrees"), "sweep.poly_degrees");
  std::vector<int> degs(degrees.begin(), degrees.end());
  const auto& lambdas = config.get_reals("sweep.poly_lambdas");
  const int epochs = static_cast<int>(config.get_int("sweep.direct_epochs"));
  const auto seeds = config.seeds();
  const auto& test_grid = iv_grid();

  // One problem (and training pool) per (truth, seed), shared by all methods.
  std::vector<std::shared_ptr<const IvProblem>> problems(truths.size() * seeds.size());
  std::vector<IvData> data(problems.size());
  std::vector<std::string> setup_error(problems.size());
  parallel_for(problems.size(), context.jobs, [&](std::size_t i) {
    const std::string& truth = truths[i / seeds.size()];
    const std::uint64_t seed = seeds[i % seeds.size()];
    try {
      IvSpec spec;
      spec.truth = iv_truth_from_string(truth);
      spec.instrument = config.get_string("problem.instrument") == "first" ? IvInstrument::kFirst : IvInstrument::kMean;
      spec.noise_var = config.get_real("problem.noise_var");
      spec.net_dims = net;
      spec.n_outer_pool = n_train;
      spec.pool_seed = run_seed(config, "iv pool truth=" + truth, seed);
      spec.reference_outer = static_cast<long>(config.get_int("problem.reference_outer"));
      spec.reference_inner = static_cast<long>(config.get_int("problem.reference_inner"));
      problems[i] = make_iv(spec);
      data[i] = problems[i]->pool_data();
    } catch (const std::exception& e) {
      setup_error[i] = e.what();
    }
  });

  struct Task {
    std::size_t problem;
    std::string method;
    double hyper;  // c for bsgd, learning rate for direct_nn
  };
  std::vector<Task> tasks;
  for (std::size_t t = 0; t < truths.size(); ++t) {
    for (const auto& method : methods) {
      std::vector<double> hypers = {std::nan("")};
      if (method == "bsgd") hypers = grid;
      if (method == "direct_nn") hypers = lrs;
      require(!hypers.empty(), "sweep: empty hyperparameter list for " + method);
      for (double h : hypers) {
        for (std::size_t k = 0; k < seeds.size(); ++k) tasks.push_back({t * seeds.size() + k, method, h});
      }
    }
  }
  std::vector<std::vector<Cell>> rows(tasks.size());
  std::vector<double> mse(tasks.size(), std::nan(""));

  parallel_for(tasks.size(), context.jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const std::string& truth_name = truths[task.problem / seeds.size()];
    const std::uint64_t seed = seeds[task.problem % seeds.size()];
    std::vector<Cell> row = {truth_name, task.method, std::isnan(task.hyper) ? Cell{} : Cell{task.hyper},
                             static_cast<long long>(seed)};
    try {
      if (!setup_error[task.problem].empty()) throw InvalidArgument(setup_error[task.problem]);
      const IvProblem& problem = *problems[task.problem];
      const IvData& d = data[task.problem];
      const IvTruth truth = problem.spec().truth;
      double value = 0.0;
      std::string detail;
      if (task.method == "bsgd") {
        Engine init_rng(run_seed(config, "iv init", seed));
        const Vector w1 = Mlp::glorot(net, init_rng).weights;
        RunConfig rc = engine_config(config, w1, T, m, task.hyper);
        rc.trace_every = T;
        rc.seed = run_seed(config, coords("iv bsgd truth=%s c=%.17g", truth_name.c_str(), task.hyper), seed);
        const RunTrace trace = bsgd_run(problem, rc);
        value = test_mse(problem.shape(), evaluated_point(config, trace), truth, test_grid);
      } else if (task.method == "two_sls") {
        const LinearModel model = two_sls_fit(d.X, d.Z, d.Y);
        value = test_mse(model, truth, test_grid);
        for (const auto& w : model.warnings) detail += (detail.empty() ? "" : "; ") + w;
      } else if (task.method == "poly2sls") {
        const PolyModel model = poly_two_sls_select(d.X, d.Z, d.Y, degs, lambdas);
        value = test_mse(model, truth, test_grid);
        detail = coords("degree=%d lambda=%.17g", model.degree, model.ridge_lambda);
      } else {
        DirectNnOptions opts;
        opts.net_dims = net;
        opts.epochs = epochs;
        opts.lr = task.hyper;
        Engine rng(run_seed(config, coords("iv direct truth=%s lr=%.17g", truth_name.c_str(), task.hyper), seed));
        const Mlp fit = direct_nn_fit(d.X, d.Y, opts, rng);
        value = test_mse(fit.shape, fit.weights, truth, test_grid);
      }
      if (!std::isfinite(value)) throw NonFiniteError("test MSE is not finite");
      mse[i] = value;
      row.insert(row.end(), {value, "ok", detail});
    } catch (const std::exception& e) {
      row.insert(row.end(), {Cell{}, error_status(e), e.what()});
    }
    rows[i] = std::move(row);
  });

  ExperimentResult result;
  Table runs{"iv_runs", {"truth", "method", "hyper", "seed", "test_mse", "status", "message"}, {}};
  for (auto& r : rows) {
    if (std::get<std::string>(r[5]) != "ok") ++result.failed_runs;
    runs.add(std::move(r));
  }

  Table summary{"iv_summary", {"truth", "method", "best_hyper", "mean_test_mse", "std_err", "runs"}, {}};
  Table wide{"iv_table", {"truth"}, {}};
  for (const auto& method : methods) wide.columns.push_back(method);
  std::size_t i = 0;
  for (const auto& truth : truths) {
    std::vector<Cell> wide_row = {truth};
    for (const auto& method : methods) {
      std::vector<double> hypers = {std::nan("")};
      if (method == "bsgd") hypers = grid;
      if (method == "direct_nn") hypers = lrs;
      MeanSe best{std::numeric_limits<double>::infinity(), 0.0, 0};
      Cell best_h;
      for (double h : hypers) {
        std::vector<double> vals;
        for (std::size_t k = 0; k < seeds.size(); ++k, ++i) {
          if (std::isfinite(mse[i])) vals.push_back(mse[i]);
        }
        const MeanSe agg = mean_se(vals);
        if (agg.n == static_cast<long>(seeds.size()) && agg.mean < best.mean) {
          best = agg;
          best_h = std::isnan(h) ? Cell{} : Cell{h};
        }
      }
      summary.add({truth, method, best_h, best.mean, best.std_err, static_cast<long long>(best.n)});
      wide_row.push_back(best.mean);
    }
    wide.add(std::move(wide_row));
  }
  result.tables = {std::move(runs), std::move(summary), std::move(wide)};
  return result;
}

}  // namespace bsgd::cli
