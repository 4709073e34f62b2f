#pragma once

// Flat key=value run configuration with a fixed schema (docs/config.md).

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ngf/assemble.hpp"
#include "ngf/solvers.hpp"
#include "ngf/train.hpp"

namespace ngf {

enum class ValueKind { String, Int, Real, Bool, IntList, Schedule };

struct ConfigKey {
  std::string name;
  ValueKind kind;
  std::string fallback;  // default before problem presets
  std::string help;
};

/// Every accepted key.
const std::vector<ConfigKey>& config_schema();

/// Keys set by the preset of a problem (values the reference experiments state).
std::map<std::string, std::string> problem_preset(const std::string& problem);

class RunConfig {
 public:
  /// Defaults + preset of the selected problem + `overrides`. Unknown keys and
  /// malformed values raise ConfigError.
  static RunConfig resolve(const std::map<std::string, std::string>& overrides);
  static RunConfig from_file(const std::filesystem::path& path,
                             const std::map<std::string, std::string>& cli_overrides = {});
  static std::map<std::string, std::string> parse_text(const std::string& text);

  const std::string& str(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<int> int_list(const std::string& key) const;
  std::map<int, double> schedule(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Sorted key=value lines; feeding it back through from_file reproduces the config.
  std::string echo() const;
  std::string hash() const;

  ProblemSpec problem() const;
  TrainConfig train_config() const;
  GmresConfig gmres_config() const;
  HybridConfig hybrid_config() const;
  Quadrature quadrature() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ngf
