#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kfbias::cli {

/// Raised on any schema violation; the message names the offending field and
/// line. Mapped to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parsed scenario file. Sections and keys are fixed; unknown keys are
/// errors. Exactly one of [bias] epsilon / theta is given, the other is
/// derived against the model's true parameter.
struct ScenarioConfig {
  // [model]
  std::string kind;       // "ar1" | "tanh"
  double theta0 = 0.0;    // key "phi0" for ar1, "theta0" for tanh
  double q = 0.0;         // state noise variance
  double r = 0.0;         // observation noise variance
  // [bias]
  std::optional<double> epsilon;
  std::optional<double> theta;
  // [run]
  int horizon = 0;
  std::uint64_t seed = 0;
  std::optional<int> replications;
  std::optional<std::vector<double>> scales;
  std::vector<int> check_times{1, 5, 20, 50};
  std::optional<double> order_threshold;
  // [output]
  std::string directory = "out";
  bool scale_by_100 = false;

  bool operator==(const ScenarioConfig&) const = default;

  double bias_value() const { return epsilon ? *epsilon : *theta - theta0; }
  double biased_theta() const { return theta ? *theta : theta0 + *epsilon; }
};

ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig parse_config_file(const std::string& path);

/// Canonical serialization; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& c);

}  // namespace kfbias::cli
