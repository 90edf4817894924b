#ifndef TWOPT_DWOS_HPP
#define TWOPT_DWOS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "twopt/arrival.hpp"
#include "twopt/eval.hpp"
#include "twopt/penalty.hpp"
#include "twopt/wos.hpp"

namespace twopt {

struct DwosConfig {
  double tau = 1.0;
  double threshold = 30.0;
  double omega = 0.5;
  Penalty penalty = Penalty::power(0.1, 1.1);
  ArrivalEngine engine = ArrivalEngine::exact_normal();
  std::uint64_t runs = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Position {
  /// 1-based index of the client being driven to.
  int client;
  /// Time already spent on that leg.
  double elapsed;
};

/// N_j and b_j at time tau * j. RouteFinished once tau * j reaches the total.
Position locate_position(const Eigen::VectorXd& realized, double tau, int j);

struct DwosRunRecord {
  Eigen::VectorXd realized;
  Schedule initial;
  Schedule final;
  std::vector<std::optional<double>> update_times;
  /// Static start minus update time; empty for clients never updated.
  std::vector<std::optional<double>> advance_notice;
  CostBreakdown costs;
  CostBreakdown static_costs;
  /// Updates sent after the deliverer had already reached the client.
  int late_communications = 0;
  int epochs = 0;

  int update_count() const;
};

/// Simulates dynamic updates on one route. `initial` is the static WOS schedule of the
/// full route and `realized` the leg durations of this run.
DwosRunRecord simulate_run(std::span<const TravelTimeDist> legs, const DwosConfig& config,
                           const Schedule& initial, const Eigen::VectorXd& realized);

/// Draws the realized legs of run `run` (same draws as mc_objective) and
/// simulates it.
DwosRunRecord simulate_run(std::span<const TravelTimeDist> legs, const DwosConfig& config,
                           std::uint64_t run);

/// Static schedule for the whole route under config's engine.
Schedule static_schedule(std::span<const TravelTimeDist> legs, const DwosConfig& config);

Eigen::VectorXd draw_realized(std::span<const TravelTimeDist> legs, std::uint64_t seed,
                              std::uint64_t run);

/// config.runs runs, in run order regardless of `threads`.
std::vector<DwosRunRecord> simulate_runs(std::span<const TravelTimeDist> legs,
                                         const DwosConfig& config, unsigned threads = 1);

/// (static - dwos) / static * 100.
double relative_difference(double static_cost, double dwos_cost);

struct NoticeRow {
  int client = 0;
  /// Runs in which the client received an update.
  int updates = 0;
  /// Percentage of those runs with notice below each threshold; empty when updates == 0.
  std::vector<double> below_pct;
  std::optional<double> mean;
};

std::vector<NoticeRow> advance_notice_stats(std::span<const DwosRunRecord> records,
                                            std::span<const int> clients,
                                            std::span<const double> thresholds);

/// One JSON object on a single line.
std::string to_json_line(const DwosRunRecord& record, std::uint64_t run);

}  // namespace twopt

#endif  // TWOPT_DWOS_HPP
