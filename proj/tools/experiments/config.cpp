#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace bsgd::cli {

namespace {

const char* const kStepGrid = "0.001,0.003,0.01,0.03,0.1,0.3,1,3,10,30";

KeySpec key(std::string section, std::string name, ValueType type, std::string def,
            std::string help, std::vector<std::string> choices = {}) {
  return {std::move(section), std::move(name), type, std::move(def), std::move(choices), std::move(help)};
}

void add_top(std::vector<KeySpec>& s, const std::string& experiment, const std::string& seeds) {
  s.push_back(key("", "experiment", ValueType::kString, experiment, "experiment kind", experiment_names()));
  s.push_back(key("", "root_seed", ValueType::kInt, "0", "root of all derived run seeds"));
  s.push_back(key("", "seeds", ValueType::kIntList, seeds, "seed indices"));
  s.push_back(key("", "output_dir", ValueType::kString, "", "output directory (empty: --output, $BSGD_OUTPUT_DIR, ./bsgd-out)"));
}

void add_quadratic(std::vector<KeySpec>& s, const std::string& shift, const std::string& a,
                   const std::string& b) {
  s.push_back(key("problem", "kind", ValueType::kString, "smooth", "f(u) = |u|^2 or |u|_1", {"smooth", "nonsmooth"}));
  s.push_back(key("problem", "d", ValueType::kInt, "1", "dimension"));
  s.push_back(key("problem", "sigma", ValueType::kReal, "1", "inner noise standard deviation"));
  s.push_back(key("problem", "shift", ValueType::kString, shift, "law of the outer shift y",
                  {"constant", "normal", "uniform", "two_point"}));
  s.push_back(key("problem", "shift_a", ValueType::kReal, a, "constant value, mean, lower end or first point"));
  s.push_back(key("problem", "shift_b", ValueType::kReal, b, "standard deviation, upper end or second point"));
  s.push_back(key("problem", "shift_p", ValueType::kReal, "0.5", "two_point: probability of the first point"));
}

void add_engine(std::vector<KeySpec>& s, const std::string& step, const std::string& output,
                const std::string& domain, const std::string& x1, const std::string& evaluate,
                bool with_x1 = true) {
  s.push_back(key("engine", "step", ValueType::kString, step, "stepsize schedule",
                  {"strongly_convex", "constant", "decaying"}));
  s.push_back(key("engine", "mu", ValueType::kReal, "2", "strongly_convex: gamma_t = 1/(mu t)"));
  s.push_back(key("engine", "c", ValueType::kReal, "1", "constant: c/sqrt(T); decaying: c/sqrt(t)"));
  s.push_back(key("engine", "batch", ValueType::kString, "fixed", "inner batch schedule", {"fixed", "linear", "ceil_sqrt"}));
  s.push_back(key("engine", "output", ValueType::kString, output, "output policy",
                  {"average", "uniform_random", "stepsize_weighted"}));
  s.push_back(key("engine", "evaluate", ValueType::kString, evaluate,
                  "point that is scored: the policy output or the last iterate", {"output", "last"}));
  s.push_back(key("engine", "domain", ValueType::kString, domain, "feasible set", {"unconstrained", "box", "ball"}));
  s.push_back(key("engine", "lower", ValueType::kReal, "-3", "box lower bound (every coordinate)"));
  s.push_back(key("engine", "upper", ValueType::kReal, "3", "box upper bound (every coordinate)"));
  s.push_back(key("engine", "radius", ValueType::kReal, "10", "ball radius around the origin"));
  if (with_x1) s.push_back(key("engine", "x1", ValueType::kRealList, x1, "initial point; one value is broadcast"));
  s.push_back(key("engine", "trace_every", ValueType::kInt, "0", "trace stride (0: about 100 records per run)"));
  s.push_back(key("engine", "outer_batch", ValueType::kInt, "1", "outer samples per iteration"));
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"bias_sweep", "rate_study", "logistic", "maml", "iv", "floor"};
  return names;
}

std::vector<KeySpec> schema_for(const std::string& experiment) {
  std::vector<KeySpec> s;
  if (experiment == "bias_sweep") {
    add_top(s, experiment, "0");
    add_quadratic(s, "constant", "0", "1");
    s.push_back(key("problem", "x", ValueType::kRealList, "0", "probe point; one value is broadcast"));
    s.push_back(key("sweep", "m_list", ValueType::kIntList, "1,4,16,64,256", "inner batch sizes"));
    s.push_back(key("sweep", "n_mc", ValueType::kInt, "100000", "Monte-Carlo replications per m"));
  } else if (experiment == "rate_study") {
    add_top(s, experiment, "0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19");
    add_quadratic(s, "normal", "1", "1");
    add_engine(s, "strongly_convex", "average", "box", "-3", "output");
    s.push_back(key("sweep", "T_list", ValueType::kIntList, "100,1000,10000", "iteration counts"));
    s.push_back(key("sweep", "m_list", ValueType::kIntList, "1000", "fixed inner batch sizes (batch = fixed only)"));
    s.push_back(key("sweep", "c_list", ValueType::kRealList, "1", "stepsize constants (constant and decaying steps)"));
    s.push_back(key("sweep", "theorem", ValueType::kString, "auto", "bound used for the report",
                    {"auto", "strongly_convex", "convex", "weakly_convex"}));
  } else if (experiment == "logistic") {
    add_top(s, experiment, "0,1,2,3,4,5,6,7,8,9");
    s.push_back(key("problem", "d", ValueType::kInt, "10", "feature dimension"));
    s.push_back(key("problem", "sigma1_sq", ValueType::kReal, "1", "feature variance"));
    s.push_back(key("problem", "w_true_seed", ValueType::kInt, "2020", "seed of the label-generating direction"));
    s.push_back(key("problem", "reference_size", ValueType::kInt, "50000", "pairs in the reference objective"));
    s.push_back(key("problem", "reference_seed", ValueType::kInt, "7", "seed of the reference pairs"));
    add_engine(s, "constant", "average", "unconstrained", "0", "output");
    s.push_back(key("sweep", "budget", ValueType::kInt, "100000", "total samples Q per run"));
    s.push_back(key("sweep", "m_list", ValueType::kIntList, "1,5,10,20,50,100", "inner batch sizes"));
    s.push_back(key("sweep", "sigma2_sq_list", ValueType::kRealList, "1,10,100", "inner noise variances"));
    s.push_back(key("sweep", "c_grid", ValueType::kRealList, kStepGrid, "stepsize constants searched"));
    s.push_back(key("sweep", "saa", ValueType::kBool, "true", "also solve the matched-budget SAA problem"));
    s.push_back(key("sweep", "saa_tol", ValueType::kReal, "1e-9", "SAA gradient-norm tolerance"));
    s.push_back(key("sweep", "saa_max_iters", ValueType::kInt, "10000", "SAA iteration cap"));
  } else if (experiment == "maml") {
    add_top(s, experiment, "0,1,2,3,4");
    s.push_back(key("problem", "alpha", ValueType::kReal, "0.01", "inner adaptation step"));
    s.push_back(key("problem", "query_size", ValueType::kInt, "1", "query points per task"));
    s.push_back(key("problem", "net", ValueType::kIntList, "1,40,40,1", "layer widths"));
    s.push_back(key("problem", "reference_tasks", ValueType::kInt, "100", "tasks in the evaluation objective"));
    s.push_back(key("problem", "reference_query", ValueType::kInt, "100", "query points per evaluation task"));
    s.push_back(key("problem", "reference_support", ValueType::kInt, "100", "support points per evaluation task"));
    s.push_back(key("problem", "reference_seed", ValueType::kInt, "11", "seed of the evaluation tasks"));
    add_engine(s, "constant", "uniform_random", "unconstrained", "", "last", false);
    s.push_back(key("sweep", "budget", ValueType::kInt, "100000", "total samples Q per run"));
    s.push_back(key("sweep", "m_list", ValueType::kIntList, "5,10,20,50,100", "support sizes"));
    s.push_back(key("sweep", "methods", ValueType::kStringList, "bsgd,fo_maml,adam", "optimizers",
                    {"bsgd", "fo_maml", "adam"}));
    s.push_back(key("sweep", "c_grid", ValueType::kRealList, kStepGrid, "stepsize constants for bsgd and fo_maml"));
    s.push_back(key("sweep", "adam_lr_list", ValueType::kRealList, "0.001", "Adam learning rates"));
    s.push_back(key("sweep", "moreau", ValueType::kBool, "false", "estimate the Moreau gradient mapping"));
    s.push_back(key("sweep", "moreau_lambda", ValueType::kReal, "0.01", "envelope parameter"));
    s.push_back(key("sweep", "moreau_iters", ValueType::kInt, "200", "prox subproblem iterations"));
    s.push_back(key("sweep", "moreau_samples", ValueType::kInt, "100", "support points per prox gradient"));
    s.push_back(key("sweep", "moreau_outer", ValueType::kInt, "10", "tasks per prox gradient"));
    s.push_back(key("sweep", "moreau_query", ValueType::kInt, "100", "query points per prox task (same objective)"));
  } else if (experiment == "iv") {
    add_top(s, experiment, "0,1,2,3,4,5,6,7,8,9");
    s.push_back(key("problem", "instrument", ValueType::kString, "mean", "z = (Z1+Z2)/2 or Z1", {"mean", "first"}));
    s.push_back(key("problem", "noise_var", ValueType::kReal, "0.1", "variance of the additive noises"));
    s.push_back(key("problem", "net", ValueType::kIntList, "1,40,40,1", "layer widths"));
    s.push_back(key("problem", "reference_outer", ValueType::kInt, "1", "outer samples in the reference objective"));
    s.push_back(key("problem", "reference_inner", ValueType::kInt, "1", "inner samples in the reference objective"));
    add_engine(s, "constant", "average", "unconstrained", "", "last", false);
    s.push_back(key("sweep", "truths", ValueType::kStringList, "abs,linear,sine,step", "structural functions",
                    {"abs", "linear", "sine", "step"}));
    s.push_back(key("sweep", "methods", ValueType::kStringList, "bsgd,two_sls,poly2sls,direct_nn", "estimators",
                    {"bsgd", "two_sls", "poly2sls", "direct_nn"}));
    s.push_back(key("sweep", "n_train", ValueType::kInt, "10000", "observed (Y, X, Z) triples"));
    s.push_back(key("sweep", "T", ValueType::kInt, "20000", "BSGD iterations"));
    s.push_back(key("sweep", "m", ValueType::kInt, "5", "BSGD inner batch size"));
    s.push_back(key("sweep", "c_grid", ValueType::kRealList, kStepGrid, "BSGD stepsize constants searched"));
    s.push_back(key("sweep", "direct_lr_list", ValueType::kRealList, "0.001,0.003,0.01", "direct NN learning rates"));
    s.push_back(key("sweep", "direct_epochs", ValueType::kInt, "10", "direct NN epochs"));
    s.push_back(key("sweep", "poly_degrees", ValueType::kIntList, "1,2,3", "Poly2SLS degrees"));
    s.push_back(key("sweep", "poly_lambdas", ValueType::kRealList, "0,0.01,0.1,1,10,100", "Poly2SLS ridge penalties"));
  } else if (experiment == "floor") {
    add_top(s, experiment, "0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19");
    s.push_back(key("problem", "variant", ValueType::kString, "convex_abs", "hard function",
                    {"convex_abs", "strongly_convex"}));
    s.push_back(key("problem", "V", ValueType::kReal, "1", "oracle noise variance"));
    s.push_back(key("problem", "alpha_rule", ValueType::kString, "proportional", "alpha as factor B or B + sqrt(V/T)/2",
                    {"proportional", "boundary"}));
    s.push_back(key("problem", "alpha_factor", ValueType::kReal, "2", "proportional rule factor"));
    s.push_back(key("problem", "x1", ValueType::kReal, "0", "initial point in [-1, 1]"));
    s.push_back(key("sweep", "B_list", ValueType::kRealList, "0.05,0.1,0.2,0.4", "oracle biases"));
    s.push_back(key("sweep", "T_list", ValueType::kIntList, "10000", "oracle queries per run"));
    s.push_back(key("sweep", "c_grid", ValueType::kRealList, kStepGrid, "stepsize constants searched"));
  } else {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  return s;
}

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

const char* type_name(ValueType t) {
  switch (t) {
    case ValueType::kBool: return "boolean";
    case ValueType::kInt: return "integer";
    case ValueType::kReal: return "real";
    case ValueType::kString: return "string";
    case ValueType::kIntList: return "integer list";
    case ValueType::kRealList: return "real list";
    case ValueType::kStringList: return "string list";
  }
  return "value";
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  if (ec == std::errc() && ptr == end) return true;
  // Accept integral scientific notation such as 1e5.
  double d = 0.0;
  if (!parse_real(s, d) || d != std::floor(d) || std::abs(d) > 9.0e15) return false;
  out = static_cast<long long>(d);
  return true;
}

std::string describe(const KeySpec& spec) {
  return spec.section.empty() ? "'" + spec.key + "'" : "'" + spec.key + "' in [" + spec.section + "]";
}

void check_choice(const KeySpec& spec, const std::string& v, const std::string& where) {
  if (spec.choices.empty()) return;
  if (std::find(spec.choices.begin(), spec.choices.end(), v) != spec.choices.end()) return;
  std::string allowed;
  for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
  throw ConfigError(where + ": key " + describe(spec) + " must be one of {" + allowed + "}, got '" + v + "'");
}

Value parse_value(const KeySpec& spec, const std::string& text, const std::string& where) {
  const auto mismatch = [&] {
    return ConfigError(where + ": key " + describe(spec) + " expects " + type_name(spec.type) + ", got '" +
                       text + "'");
  };
  switch (spec.type) {
    case ValueType::kBool:
      if (text == "true" || text == "yes" || text == "1") return true;
      if (text == "false" || text == "no" || text == "0") return false;
      throw mismatch();
    case ValueType::kInt: {
      long long v = 0;
      if (!parse_int(text, v)) throw mismatch();
      return v;
    }
    case ValueType::kReal: {
      double v = 0.0;
      if (!parse_real(text, v)) throw mismatch();
      return v;
    }
    case ValueType::kString:
      check_choice(spec, text, where);
      return text;
    case ValueType::kIntList: {
      std::vector<long long> out;
      for (const auto& item : split_list(text)) {
        long long v = 0;
        if (!parse_int(item, v)) throw mismatch();
        out.push_back(v);
      }
      return out;
    }
    case ValueType::kRealList: {
      std::vector<double> out;
      for (const auto& item : split_list(text)) {
        double v = 0.0;
        if (!parse_real(item, v)) throw mismatch();
        out.push_back(v);
      }
      return out;
    }
    case ValueType::kStringList: {
      std::vector<std::string> out = split_list(text);
      for (const auto& item : out) check_choice(spec, item, where);
      return out;
    }
  }
  throw mismatch();
}

std::string path_of(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

struct Assignment {
  std::string section;
  std::string key;
  std::string value;
  std::string where;
};

}  // namespace

const Value& Config::at(const std::string& path) const {
  const auto it = values_.find(path);
  if (it == values_.end()) throw ConfigError("config has no key '" + path + "'");
  return it->second;
}

template <class T>
static const T& get_as(const Value& v, const std::string& path) {
  if (const T* p = std::get_if<T>(&v)) return *p;
  throw ConfigError("config key '" + path + "' has a different type");
}

bool Config::get_bool(const std::string& p) const { return get_as<bool>(at(p), p); }
long long Config::get_int(const std::string& p) const { return get_as<long long>(at(p), p); }
double Config::get_real(const std::string& p) const { return get_as<double>(at(p), p); }
const std::string& Config::get_string(const std::string& p) const { return get_as<std::string>(at(p), p); }
const std::vector<long long>& Config::get_ints(const std::string& p) const {
  return get_as<std::vector<long long>>(at(p), p);
}
const std::vector<double>& Config::get_reals(const std::string& p) const {
  return get_as<std::vector<double>>(at(p), p);
}
const std::vector<std::string>& Config::get_strings(const std::string& p) const {
  return get_as<std::vector<std::string>>(at(p), p);
}

std::vector<std::uint64_t> Config::seeds() const {
  std::vector<std::uint64_t> out;
  for (long long s : get_ints("seeds")) out.push_back(static_cast<std::uint64_t>(s));
  return out;
}

Config parse_config(const std::string& text, const std::string& pinned,
                    const std::vector<std::string>& overrides) {
  std::vector<Assignment> assignments;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = "line " + std::to_string(line_no);
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "problem" && section != "engine" && section != "sweep") {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    assignments.push_back({section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where});
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set " + o + ": expected section.key=value");
    std::string path = trim(o.substr(0, eq));
    std::string sec;
    if (const auto dot = path.find('.'); dot != std::string::npos) {
      sec = path.substr(0, dot);
      path = path.substr(dot + 1);
    }
    assignments.push_back({sec, path, trim(o.substr(eq + 1)), "--set " + o});
  }

  std::string experiment = pinned;
  for (const auto& a : assignments) {
    if (!a.section.empty() || a.key != "experiment") continue;
    if (!pinned.empty() && a.value != pinned) {
      throw ConfigError(a.where + ": experiment '" + a.value + "' conflicts with subcommand '" + pinned + "'");
    }
    experiment = a.value;
  }
  if (experiment.empty()) throw ConfigError("missing required field 'experiment'");
  if (std::find(experiment_names().begin(), experiment_names().end(), experiment) == experiment_names().end()) {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }

  const auto schema = schema_for(experiment);
  Config cfg;
  cfg.experiment_ = experiment;
  std::map<std::string, std::string> seen;
  for (const auto& a : assignments) {
    const auto it = std::find_if(schema.begin(), schema.end(), [&](const KeySpec& k) {
      return k.section == a.section && k.key == a.key;
    });
    if (it == schema.end()) {
      throw ConfigError(a.where + ": unknown key '" + a.key + "'" +
                        (a.section.empty() ? std::string(" at top level") : " in [" + a.section + "]") +
                        " for experiment " + experiment);
    }
    const std::string path = path_of(a.section, a.key);
    if (const auto prev = seen.find(path); prev != seen.end() && a.where.rfind("--set", 0) != 0) {
      throw ConfigError(a.where + ": duplicate key '" + a.key + "' (first set at " + prev->second + ")");
    }
    seen[path] = a.where;
    cfg.values_[path] = parse_value(*it, a.value, a.where);
  }
  for (const auto& k : schema) {
    const std::string path = path_of(k.section, k.key);
    if (!cfg.values_.count(path)) cfg.values_[path] = parse_value(k, k.default_text, "default of " + path);
  }
  return cfg;
}

namespace {

std::string render(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, long long>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_real(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else {
          std::string out;
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out += ",";
            if constexpr (std::is_same_v<typename T::value_type, double>) {
              out += format_real(x[i]);
            } else if constexpr (std::is_same_v<typename T::value_type, long long>) {
              out += std::to_string(x[i]);
            } else {
              out += x[i];
            }
          }
          return out;
        }
      },
      v);
}

}  // namespace

std::string echo_config(const Config& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& k : schema_for(config.experiment())) {
    if (k.section != section) {
      section = k.section;
      out << "\n[" << section << "]\n";
    }
    out << k.key << " = " << render(config.values().at(path_of(k.section, k.key))) << "\n";
  }
  return out.str();
}

}  // namespace bsgd::cli
