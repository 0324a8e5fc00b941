#include <Eigen/Core>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <nlohmann/json.hpp>

#include "experiments.hpp"

#ifndef BSGD_VERSION
#define BSGD_VERSION "unknown"
#endif

namespace bsgd::cli {

const Table& ExperimentResult::table(const std::string& name) const {
  for (const auto& t : tables) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("experiment result has no table '" + name + "'");
}

ExperimentResult run_experiment(const Config& config, const RunContext& context) {
  const std::string& e = config.experiment();
  if (e == "bias_sweep") return run_bias_sweep(config, context);
  if (e == "rate_study") return run_rate_study(config, context);
  if (e == "logistic") return run_logistic(config, context);
  if (e == "maml") return run_maml(config, context);
  if (e == "iv") return run_iv(config, context);
  if (e == "floor") return run_floor(config, context);
  throw ConfigError("unknown experiment '" + e + "'");
}

std::filesystem::path resolve_output_dir(const Config& config, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const auto& dir = config.get_string("output_dir"); !dir.empty()) return dir;
  if (const char* env = std::getenv("BSGD_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "bsgd-out";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void write_outputs(const Config& config, const ExperimentResult& result, const std::filesystem::path& dir,
                   const RunInfo& info) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::ordered_json meta;
  meta["experiment"] = config.experiment();
  meta["bsgd_version"] = BSGD_VERSION;
  meta["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION);
#if defined(__clang__)
  meta["compiler"] = "clang " __clang_version__;
#elif defined(__GNUC__)
  meta["compiler"] = "gcc " __VERSION__;
#endif
  meta["command_line"] = info.command_line;
  meta["finished_utc"] = utc_now();
  meta["wall_seconds"] = info.wall_seconds;
  meta["jobs"] = info.jobs;
  meta["seed_derivation"] =
      "run seed = splitmix64(splitmix64(root_seed ^ fnv1a64(coordinates)) + seed_index); "
      "coordinates are the experiment name and sweep values rendered with %.17g";
  meta["failed_runs"] = result.failed_runs;
  meta["resolved_config"] = echo_config(config);
  auto& notes = meta["notes"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : result.notes) notes[k] = v;
  auto& files = meta["tables"] = nlohmann::ordered_json::array();
  for (const auto& t : result.tables) {
    write_file(dir / (t.name + ".csv"), to_csv(t));
    files.push_back({{"file", t.name + ".csv"}, {"rows", t.rows.size()}});
  }
  write_file(dir / "config.resolved.ini", echo_config(config));
  write_file(dir / "metadata.json", meta.dump(2) + "\n");
}

}  // namespace bsgd::cli
