#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace bsgd::cli {

/// Line-oriented key = value format with [section] headers:
///
///   experiment = rate_study
///   seeds = 0,1,2
///   [engine]
///   T = 1000
///
/// Keys before the first header are top-level. '#' starts a comment.
/// Lists are comma-separated. Every key of the experiment's schema is either
/// set or defaulted; keys outside the schema are errors.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueType { kBool, kInt, kReal, kString, kIntList, kRealList, kStringList };

using Value = std::variant<bool, long long, double, std::string, std::vector<long long>,
                           std::vector<double>, std::vector<std::string>>;

struct KeySpec {
  std::string section;  // "" for top-level
  std::string key;
  ValueType type;
  std::string default_text;
  std::vector<std::string> choices;  // allowed values for strings and string lists
  std::string help;
};

const std::vector<std::string>& experiment_names();

/// Full schema of one experiment, in echo order.
std::vector<KeySpec> schema_for(const std::string& experiment);

class Config {
 public:
  const std::string& experiment() const { return experiment_; }

  bool get_bool(const std::string& path) const;
  long long get_int(const std::string& path) const;
  double get_real(const std::string& path) const;
  const std::string& get_string(const std::string& path) const;
  const std::vector<long long>& get_ints(const std::string& path) const;
  const std::vector<double>& get_reals(const std::string& path) const;
  const std::vector<std::string>& get_strings(const std::string& path) const;

  std::uint64_t root_seed() const { return static_cast<std::uint64_t>(get_int("root_seed")); }
  std::vector<std::uint64_t> seeds() const;

  const std::map<std::string, Value>& values() const { return values_; }
  bool operator==(const Config& other) const = default;

 private:
  friend Config parse_config(const std::string&, const std::string&, const std::vector<std::string>&);
  const Value& at(const std::string& path) const;

  std::string experiment_;
  std::map<std::string, Value> values_;  // "section.key" or "key"
};

/// Parses and validates. `pinned` fixes the experiment (a subcommand); an
/// `experiment` line that disagrees is an error. `overrides` are extra
/// "section.key=value" assignments applied after the text.
Config parse_config(const std::string& text, const std::string& pinned = "",
                    const std::vector<std::string>& overrides = {});

/// Canonical text with every key resolved; parse_config(echo_config(c)) == c.
std::string echo_config(const Config& config);

std::string format_real(double value);

}  // namespace bsgd::cli
