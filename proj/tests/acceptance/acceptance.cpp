// Acceptance checks. Usage: bsgd_acceptance [--jobs N] [criterion ...]
// Prints one PASS/FAIL line per criterion and exits nonzero if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bsgd/baselines.hpp"
#include "bsgd/cso.hpp"
#include "bsgd/nn.hpp"
#include "bsgd/problems.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "problem_fd.hpp"

using namespace bsgd;
using namespace bsgd::cli;

namespace {

int g_jobs = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

ExperimentResult run(const std::string& text, const std::vector<std::string>& overrides = {}, int jobs = -1) {
  return run_experiment(parse_config(text, "", overrides), RunContext{jobs < 0 ? g_jobs : jobs});
}

bool in(double v, double lo, double hi) { return v >= lo && v <= hi; }

// Rows of `t` whose column `col` renders as `value`.
std::vector<std::size_t> rows_where(const Table& t, const std::string& col, const std::string& value) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.text(r, col) == value) out.push_back(r);
  }
  return out;
}

// --- 1, 2: bias law ---------------------------------------------------------

Outcome bias_law(const std::string& kind, const std::function<double(int)>& expected, double slo, double shi) {
  const auto res = run("experiment = bias_sweep\n[problem]\nkind = " + kind + "\n[sweep]\nn_mc = 1000000\n");
  const Table& t = res.table("bias_sweep");
  bool within = true;
  std::string worst;
  double worst_z = 0.0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int m = static_cast<int>(t.number(r, "m"));
    const double z = std::abs(t.number(r, "mean_gap") - expected(m)) / t.number(r, "std_err");
    if (!(z <= 3.0)) within = false;
    if (z > worst_z || !std::isfinite(z)) {
      worst_z = z;
      worst = fmt("m=%d", m);
    }
  }
  const double slope = res.table("bias_sweep_fit").number(0, "slope");
  const bool ok = within && t.rows.size() == 5 && in(slope, slo, shi);
  return {ok, fmt("max |gap - expected|/se = %.2f (%s), slope %.4f in [%.2f, %.2f]", worst_z, worst.c_str(), slope,
                  slo, shi)};
}

Outcome c1() { return bias_law("smooth", [](int m) { return 1.0 / m; }, -1.1, -0.9); }

Outcome c2() {
  return bias_law("nonsmooth", [](int m) { return std::sqrt(2.0 / (std::numbers::pi * m)); }, -0.6, -0.4);
}

// --- 3: gradient correctness --------------------------------------------------

Outcome c3() {
  using namespace testutil;
  std::vector<std::string> parts;
  bool ok = true;
  auto suite = [&](const std::string& name, int draws, double tol, const std::function<double(int)>& one) {
    double worst = 0.0;
    for (int k = 0; k < draws; ++k) worst = std::max(worst, one(k));
    const bool pass = worst < tol;
    ok = ok && pass;
    parts.push_back(fmt("%s %d draws max %.1e%s", name.c_str(), draws, worst, pass ? "" : " (over tolerance)"));
  };

  {
    QuadraticCsoSpec spec;
    spec.d = 3;
    spec.shift = ShiftLaw::normal(1.0, 1.0);
    const QuadraticProblem p(spec);
    Engine rng(301);
    suite("quadratic", 20, 1e-4, [&](int) {
      const Vector x = random_vector(3, rng, 2.0);
      const OuterSample xi = p.sample_outer(rng);
      return fd_error(p, x, xi, p.sample_inner(xi, 7, rng));
    });
  }
  {
    InvariantLogisticSpec spec;
    spec.sigma2_sq = 10.0;
    spec.reference_size = 1;
    const InvariantLogisticProblem p(spec);
    Engine rng(302);
    suite("logistic", 20, 1e-4, [&](int) {
      const Vector x = random_vector(p.dim_x(), rng, 0.5);
      const OuterSample xi = p.sample_outer(rng);
      return fd_error(p, x, xi, p.sample_inner(xi, 5, rng));
    });
  }
  {
    MamlSineSpec spec;
    spec.reference_tasks = spec.reference_query = spec.reference_support = 1;
    spec.query_size = 3;
    spec.alpha = 0.05;
    const MamlSineProblem p(spec);
    Engine rng(303);
    suite("maml", 20, 1e-4, [&](int) {
      const Vector w = p.initial_weights(rng) + random_vector(p.dim_x(), rng, 0.05);
      const OuterSample xi = p.sample_outer(rng);
      const InnerBatch b = p.sample_inner(xi, 5, rng);
      return fd_error(p, w, xi, b, maml_region(p, xi, b));
    });
  }
  {
    IvSpec spec;
    spec.reference_outer = spec.reference_inner = 1;
    const IvProblem p(spec);
    Engine rng(304);
    suite("iv", 20, 1e-4, [&](int) {
      const Vector w = Mlp::glorot(spec.net_dims, rng).weights + random_vector(p.dim_x(), rng, 0.05);
      const OuterSample xi = p.sample_outer(rng);
      const InnerBatch b = p.sample_inner(xi, 5, rng);
      return fd_error(p, w, xi, b, iv_region(p, b));
    });
  }
  {
    Engine rng(305);
    const std::vector<std::vector<int>> shapes = {{1, 8, 8, 1}, {2, 6, 3}, {3, 5, 4, 2}, {1, 40, 40, 1}};
    suite("mlp grad", 20, 1e-5, [&](int k) {
      const auto& dims = shapes[static_cast<std::size_t>(k) % shapes.size()];
      Mlp net = Mlp::glorot(dims, rng);
      net.weights += random_vector(net.weights.size(), rng, 0.05);
      const Batch b = random_batch(5, dims.front(), dims.back(), rng);
      const Vector fd = central_gradient([&](const Vector& w) { return mlp_loss(net.shape, w, b); }, net.weights,
                                         1e-6, region_of(net.shape, b.inputs));
      return relative_error(mlp_loss_grad(net, b).grad, fd);
    });
    suite("mlp hvp", 20, 1e-3, [&](int) {
      const Mlp net = Mlp::glorot({1, 10, 10, 1}, rng);
      const Batch b = random_batch(6, 1, 1, rng);
      const Vector v = random_vector(net.weights.size(), rng);
      double eps = 1e-4 * (1.0 + net.weights.norm()) / (1.0 + v.norm());
      const auto base = activation_signature(net.shape, net.weights, b.inputs);
      while (activation_signature(net.shape, net.weights + eps * v, b.inputs) != base ||
             activation_signature(net.shape, net.weights - eps * v, b.inputs) != base) {
        eps *= 0.5;
      }
      const Vector fd = (mlp_loss_grad(net.shape, net.weights + eps * v, b).grad -
                         mlp_loss_grad(net.shape, net.weights - eps * v, b).grad) / (2.0 * eps);
      return relative_error(mlp_hvp(net, b, v), fd);
    });
    // Normalised so that the symmetry (1e-8) and linearity (1e-10) tolerances both map to < 1.
    suite("hvp symmetry/linearity", 20, 1.0, [&](int) {
      const Mlp net = Mlp::glorot({2, 9, 7, 1}, rng);
      const Batch b = random_batch(5, 2, 1, rng);
      const Vector u = random_vector(net.weights.size(), rng);
      const Vector v = random_vector(net.weights.size(), rng);
      const Vector Hu = mlp_hvp(net, b, u), Hv = mlp_hvp(net, b, v);
      const double lhs = v.dot(Hu), rhs = u.dot(Hv);
      const double sym = std::abs(lhs - rhs) / (1e-8 * std::max({1.0, std::abs(lhs), std::abs(rhs)}));
      const Vector combo = mlp_hvp(net, b, 0.7 * u - 1.3 * v);
      const double lin = (combo - (0.7 * Hu - 1.3 * Hv)).norm() / (1e-10 * std::max(1.0, combo.norm()));
      return std::max(sym, lin);
    });
  }
  std::string detail;
  for (const auto& p : parts) detail += (detail.empty() ? "" : "; ") + p;
  return {ok, detail};
}

// --- 4, 5: rates --------------------------------------------------------------

Outcome c4() {
  const auto res = run("experiment = rate_study\n");
  const Table& b = res.table("rate_study_bounds");
  bool holds = b.rows.size() == 3;
  std::string gaps;
  for (std::size_t r = 0; r < b.rows.size(); ++r) {
    holds = holds && b.text(r, "holds") == "1";
    gaps += fmt("%sT=%s %.3g<=%.3g", gaps.empty() ? "" : ", ", b.text(r, "T").c_str(), b.number(r, "observed_gap"),
                b.number(r, "predicted_bound"));
  }
  // The estimator is unbiased in the gradient for this instance, so the floor subtracted is 0.
  const double slope = res.table("rate_study_fit").number(0, "slope");
  return {holds && in(slope, -1.2, -0.7), fmt("%s; slope %.4f in [-1.2, -0.7]", gaps.c_str(), slope)};
}

Outcome c5() {
  const auto res = run(
      "experiment = rate_study\n"
      "[problem]\nkind = nonsmooth\nsigma = 0.01\nshift = two_point\nshift_a = 1\nshift_b = -1\nshift_p = 0.75\n"
      "[engine]\nstep = constant\noutput = average\ndomain = box\nlower = -1\nupper = 1\nx1 = -1\n"
      "[sweep]\nT_list = 100,1000,10000\nm_list = 1,10,100,1000\nc_list = 1\ntheorem = convex\n");
  const Table& b = res.table("rate_study_bounds");
  // Smallest m whose bias term stays under 10% of the bound at every T.
  std::map<std::string, bool> small_bias;
  for (std::size_t r = 0; r < b.rows.size(); ++r) {
    const std::string m = b.text(r, "m");
    const bool ok = b.text(r, "status") == "ok" && b.number(r, "bias_term") < 0.1 * b.number(r, "predicted_bound");
    small_bias.emplace(m, true);
    small_bias[m] = small_bias[m] && ok;
  }
  for (const char* m : {"1", "10", "100", "1000"}) {
    if (!small_bias[m]) continue;
    const Table& fit = res.table("rate_study_fit");
    const auto rows = rows_where(fit, "m", m);
    if (rows.empty()) break;
    const double slope = fit.number(rows.front(), "slope");
    return {in(slope, -0.65, -0.35), fmt("m=%s (bias term < 10%% of bound), slope %.4f in [-0.65, -0.35]", m, slope)};
  }
  return {false, "no m in {1,10,100,1000} keeps the bias term under 10% of the bound"};
}

// --- 6: Moreau mapping on MAML ----------------------------------------------

Outcome c6() {
  // The weakly convex bound controls the stationarity measure, so the stepsize
  // constant is tuned on the mean mapping at the output point.
  const auto res = run(
      "experiment = maml\nseeds = 0,1,2,3,4\n[engine]\nevaluate = output\n"
      "[sweep]\nbudget = 100000\nm_list = 10\nmethods = bsgd\nmoreau = true\n");
  const Table& t = res.table("maml_runs");
  std::map<std::string, std::vector<std::size_t>> by_c;
  for (std::size_t r = 0; r < t.rows.size(); ++r) by_c[t.text(r, "hyper")].push_back(r);
  std::string best_c;
  double best_mean = INFINITY;
  for (const auto& [c, rows] : by_c) {
    double sum = 0.0;
    bool all_ok = true;
    for (auto r : rows) {
      all_ok = all_ok && t.text(r, "status") == "ok";
      if (all_ok) sum += t.number(r, "grad_mapping");
    }
    if (all_ok && sum / rows.size() < best_mean) {
      best_mean = sum / rows.size();
      best_c = c;
    }
  }
  if (best_c.empty()) return {false, "no stepsize constant completed all seeds"};
  int wins = 0;
  std::string detail;
  for (auto r : by_c[best_c]) {
    const double before = t.number(r, "grad_mapping_initial"), after = t.number(r, "grad_mapping");
    wins += after < before;
    detail += fmt("%s%.3f->%.3f", detail.empty() ? "" : ", ", before, after);
  }
  return {wins == 5, fmt("c=%s: %d/5 seeds decrease (%s)", best_c.c_str(), wins, detail.c_str())};
}

// --- 7: second-order identity -----------------------------------------------

Outcome c7() {
  MamlSineSpec spec;
  spec.reference_tasks = spec.reference_query = spec.reference_support = 1;
  spec.query_size = 5;
  spec.alpha = 0.05;
  const MamlSineProblem p(spec);
  Engine rng(701);
  double worst = 0.0, plus_form = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Vector w = p.initial_weights(rng) + testutil::random_vector(p.dim_x(), rng, 0.1);
    const OuterSample xi = p.sample_outer(rng);
    const InnerBatch b = p.sample_inner(xi, 10, rng);
    const Vector exact = estimate_gradient(p, w, xi, b);
    const Vector fo = fo_maml_gradient(p, w, xi, b);
    const Vector hvp = mlp_hvp(p.shape(), w, MamlSineProblem::support_batch(b), fo);
    const double scale = std::max(1.0, exact.norm());
    worst = std::max(worst, (exact - (fo - spec.alpha * hvp)).norm() / scale);
    plus_form = std::max(plus_form, (exact - (fo + spec.alpha * hvp)).norm() / scale);
  }
  return {worst <= 1e-10, fmt("exact = FO - alpha H FO to %.1e over 20 draws (with +alpha: %.1e)", worst, plus_form)};
}

// --- 8: logistic trend --------------------------------------------------------

Outcome c8() {
  const auto res = run("experiment = logistic\n");
  const Table& best = res.table("logistic_best");
  bool ok = best.rows.size() == 3;
  double prev_m = 0.0;
  std::string detail;
  for (std::size_t r = 0; r < best.rows.size(); ++r) {
    const double s2 = best.number(r, "sigma2_sq");
    const double m = best.number(r, "bsgd_best_m");
    const double bg = best.number(r, "bsgd_best_gap"), sg = best.number(r, "saa_best_gap");
    ok = ok && m >= prev_m;
    prev_m = m;
    if (s2 == 10.0 || s2 == 100.0) ok = ok && bg < sg;
    detail += fmt("%ssigma2^2=%g m*=%g bsgd %.4g saa %.4g", detail.empty() ? "" : "; ", s2, m, bg, sg);
  }
  return {ok, detail};
}

// --- 9: IV ordering -----------------------------------------------------------

Outcome c9() {
  const auto res = run("experiment = iv\n");
  const Table& summary = res.table("iv_summary");
  const Table& runs = res.table("iv_runs");
  bool ok = true;
  std::string detail;

  double two_sls = INFINITY, others = INFINITY;
  for (auto r : rows_where(summary, "truth", "linear")) {
    const double v = summary.number(r, "mean_test_mse");
    (summary.text(r, "method") == "two_sls" ? two_sls : others) = std::min(
        summary.text(r, "method") == "two_sls" ? two_sls : others, v);
  }
  ok = two_sls < others;
  detail = fmt("linear: 2sls %.4g vs best other %.4g", two_sls, others);

  for (const char* truth : {"abs", "sine", "step"}) {
    std::string hb, hd;
    for (auto r : rows_where(summary, "truth", truth)) {
      if (summary.text(r, "method") == "bsgd") hb = summary.text(r, "best_hyper");
      if (summary.text(r, "method") == "direct_nn") hd = summary.text(r, "best_hyper");
    }
    std::map<std::string, double> bsgd, direct;
    for (auto r : rows_where(runs, "truth", truth)) {
      const std::string method = runs.text(r, "method"), hyper = runs.text(r, "hyper");
      if (runs.text(r, "status") != "ok") continue;
      if (method == "bsgd" && hyper == hb) bsgd[runs.text(r, "seed")] = runs.number(r, "test_mse");
      if (method == "direct_nn" && hyper == hd) direct[runs.text(r, "seed")] = runs.number(r, "test_mse");
    }
    int wins = 0;
    for (const auto& [seed, v] : bsgd) wins += direct.count(seed) && v < direct[seed];
    ok = ok && wins >= 8;
    detail += fmt("; %s: bsgd (c=%s) beats direct_nn (lr=%s) on %d/10", truth, hb.c_str(), hd.c_str(), wins);
  }
  return {ok, detail};
}

// --- 10: lower-bound floor ----------------------------------------------------

Outcome c10() {
  const auto res = run("experiment = floor\n[sweep]\nT_list = 10000,20000\n");
  const Table& f = res.table("floor");
  const Table& s = res.table("floor_summary");
  const auto r1 = rows_where(s, "T", "10000");
  if (r1.empty()) return {false, "missing T=10000 summary"};
  const double corr = s.number(r1.front(), "correlation");
  const bool increasing = s.text(r1.front(), "increasing_within_2se") == "1";
  double e1 = NAN, e2 = NAN;
  std::string errs;
  for (std::size_t r = 0; r < f.rows.size(); ++r) {
    if (f.text(r, "T") == "10000") errs += fmt("%sB=%g %.4f", errs.empty() ? "" : ", ", f.number(r, "B"), f.number(r, "mean_error"));
    if (f.number(r, "B") != 0.4) continue;
    (f.text(r, "T") == "10000" ? e1 : e2) = f.number(r, "mean_error");
  }
  const double improvement = (e1 - e2) / e1;
  const bool ok = corr > 0.9 && increasing && improvement < 0.25;
  return {ok, fmt("%s; correlation %.3f (> 0.9), increasing within 2 se %s, doubling T at B=0.4 improves %.1f%% (< 25%%)",
                  errs.c_str(), corr, increasing ? "yes" : "no", 100.0 * improvement)};
}

// --- 11: determinism ------------------------------------------------------------

Outcome c11() {
  const std::vector<std::pair<std::string, std::string>> configs = {
      {"bias_sweep", "experiment = bias_sweep\n[sweep]\nn_mc = 20000\n"},
      {"rate_study", "experiment = rate_study\nseeds = 0,1,2\n[sweep]\nT_list = 100,1000\n"},
      {"logistic",
       "experiment = logistic\nseeds = 0,1\n[problem]\nreference_size = 2000\n"
       "[sweep]\nbudget = 5000\nm_list = 1,10\nsigma2_sq_list = 1,10\nc_grid = 0.3,1\n"},
      {"maml",
       "experiment = maml\nseeds = 0,1\n[problem]\nnet = 1,10,10,1\nreference_tasks = 10\n"
       "[sweep]\nbudget = 2000\nm_list = 5\nc_grid = 0.1\nmoreau = true\nmoreau_iters = 5\nmoreau_outer = 2\n"},
      {"iv",
       "experiment = iv\nseeds = 0,1\n[problem]\nnet = 1,10,10,1\n"
       "[sweep]\ntruths = abs,linear\nn_train = 500\nT = 500\nc_grid = 0.1\ndirect_epochs = 2\npoly_degrees = 1,2\n"},
      {"floor", "experiment = floor\nseeds = 0,1,2,3\n[sweep]\nT_list = 1000\n"},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [name, text] : configs) {
    const auto a = run(text, {}, 1), b = run(text, {}, 1), c = run(text, {}, 3);
    bool same = a.tables.size() == b.tables.size() && a.tables.size() == c.tables.size();
    for (std::size_t i = 0; same && i < a.tables.size(); ++i) {
      const std::string csv = to_csv(a.tables[i]);
      same = csv == to_csv(b.tables[i]) && csv == to_csv(c.tables[i]);
    }
    ok = ok && same;
    detail += fmt("%s%s %s", detail.empty() ? "" : ", ", name.c_str(), same ? "identical" : "DIFFERS");
  }
  return {ok, detail + " (reruns at 1 and 3 jobs)"};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*check)();
};

const Criterion kCriteria[] = {
    {1, "bias law, smooth", c1},
    {2, "bias law, nonsmooth", c2},
    {3, "gradient correctness", c3},
    {4, "strongly convex rate", c4},
    {5, "convex rate", c5},
    {6, "weakly convex diagnostics on MAML", c6},
    {7, "MAML second-order identity", c7},
    {8, "logistic trend", c8},
    {9, "IV ordering", c9},
    {10, "lower-bound floor", c10},
    {11, "determinism", c11},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if ((arg == "--jobs" || arg == "-j") && i + 1 < argc) {
      g_jobs = std::max(1, std::atoi(argv[++i]));
    } else if (arg == "--help" || arg == "-h") {
      std::printf("usage: bsgd_acceptance [--jobs N] [criterion ...]\n");
      for (const auto& c : kCriteria) std::printf("  %2d  %s\n", c.id, c.name);
      return 0;
    } else {
      const int id = std::atoi(arg.c_str());
      if (id < 1 || id > 11) {
        std::fprintf(stderr, "unknown criterion '%s'\n", arg.c_str());
        return 2;
      }
      selected.insert(id);
    }
  }
  int failures = 0;
  for (const auto& c : kCriteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %-34s %s  %s [%.1fs]\n", c.id, c.name, out.pass ? "PASS" : "FAIL", out.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += !out.pass;
  }
  return failures == 0 ? 0 : 1;
}
