#ifndef TWOPT_CONFIG_HPP
#define TWOPT_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twopt/arrival.hpp"
#include "twopt/dists.hpp"
#include "twopt/penalty.hpp"

namespace twopt {

struct LegSpec {
  Family family = Family::Normal;
  double mean = 10.0;
  double sd = 2.5;
  int repeat = 1;

  bool operator==(const LegSpec&) const = default;
};

/// Route sampled from a stop-pair CSV through the mixture fit.
struct DataRouteSpec {
  std::string csv;
  int K = 10;
  int n = 25;
  int max_iter = 1000;

  bool operator==(const DataRouteSpec&) const = default;
};

struct DwosSpec {
  double tau = 1.0;
  std::vector<double> thresholds{30.0};
  std::uint64_t runs = 1000;
  std::vector<int> notice_clients;
  std::vector<double> notice_thresholds;

  bool operator==(const DwosSpec&) const = default;
};

struct ExperimentConfig {
  std::vector<LegSpec> route;
  std::optional<DataRouteSpec> from_data;
  double omega = 0.5;
  Penalty penalty = Penalty::linear(0.1);
  ArrivalEngine engine;
  bool uniform = false;
  std::optional<DwosSpec> dwos;
  std::uint64_t evaluate_runs = 100000;
  std::uint64_t seed = 1;
  std::string output_dir;

  bool operator==(const ExperimentConfig&) const;

  /// Legs of a parametric route (repeats expanded). Empty for from_data.
  std::vector<TravelTimeDist> legs() const;
};

bool operator==(const ArrivalEngine& a, const ArrivalEngine& b);

/// Parses and validates JSON text. No environment overrides.
ExperimentConfig parse_config(const std::string& text);
/// Reads `path`, parses, validates and applies TW_SEED when set.
ExperimentConfig load_config(const std::string& path);

/// Full JSON with every default written out; parse_config(to_json(c)) == c.
std::string to_json(const ExperimentConfig& config);

/// FNV-1a of the canonical JSON.
std::string config_hash(const ExperimentConfig& config);

/// Throws ValidationError naming the violated condition.
void validate(const ExperimentConfig& config);

}  // namespace twopt

#endif  // TWOPT_CONFIG_HPP
