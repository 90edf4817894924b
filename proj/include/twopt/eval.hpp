#ifndef TWOPT_EVAL_HPP
#define TWOPT_EVAL_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "twopt/arrival.hpp"
#include "twopt/penalty.hpp"
#include "twopt/wos.hpp"

namespace twopt {

struct ClientCost {
  double late = 0.0;
  double early = 0.0;
  double width = 0.0;

  double total() const { return late + early + width; }
};

struct CostBreakdown {
  std::vector<ClientCost> per_client;
  double total = 0.0;
  /// Monte Carlo standard error of `total`; 0 for exact evaluations.
  double std_error = 0.0;
};

/// Expected cost of one window under F. Grid arrivals are integrated exactly
/// under their histogram reading.
ClientCost expected_client_cost(const ArrivalDist& F, double omega, const Penalty& penalty,
                                const Window& w);

/// Cost of one window for a realized arrival time.
ClientCost realized_client_cost(double arrival, double omega, const Penalty& penalty,
                                const Window& w);

/// Sample mean of G_n over `runs` independent routes. Leg i of run r is drawn
/// as legs[i].quantile(uniform01(seed, r, i, 0)), so two schedules evaluated
/// with the same seed see the same travel times.
CostBreakdown mc_objective(const Schedule& schedule, std::span<const TravelTimeDist> legs,
                           double omega, const Penalty& penalty, std::uint64_t runs,
                           std::uint64_t seed, unsigned threads = 1);

/// Several schedules on one set of sample paths.
std::vector<CostBreakdown> mc_objective(std::span<const Schedule> schedules,
                                        std::span<const TravelTimeDist> legs, double omega,
                                        const Penalty& penalty, std::uint64_t runs,
                                        std::uint64_t seed, unsigned threads = 1);

/// The travel time of leg `client` in run `run`.
double sample_leg(const TravelTimeDist& leg, std::uint64_t seed, std::uint64_t run,
                  std::uint32_t client);

/// Exact G_n for normal arrivals. EngineMismatch on grid arrivals.
CostBreakdown analytic_objective_normal(const Schedule& schedule,
                                        std::span<const ArrivalDist> arrivals, double omega,
                                        const Penalty& penalty);

/// Exact G_n for any arrivals (normal or histogram grid).
CostBreakdown expected_objective(const Schedule& schedule, std::span<const ArrivalDist> arrivals,
                                 double omega, const Penalty& penalty);

struct CostComparison {
  /// a - b per client.
  std::vector<ClientCost> deltas;
  std::vector<double> total_deltas;
  /// max - min of per-client totals.
  double spread_a = 0.0;
  double spread_b = 0.0;
};

CostComparison per_client_compare(const CostBreakdown& a, const CostBreakdown& b);

double spread(const CostBreakdown& c);

/// CSV with columns client,late,early,width,total.
void write_breakdown_csv(std::ostream& os, const CostBreakdown& c);

}  // namespace twopt

#endif  // TWOPT_EVAL_HPP
