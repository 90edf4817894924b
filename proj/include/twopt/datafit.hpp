#ifndef TWOPT_DATAFIT_HPP
#define TWOPT_DATAFIT_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "twopt/dists.hpp"

namespace twopt {

struct StopPair {
  double distance;  // km
  double time;      // minutes

  bool operator==(const StopPair&) const = default;
};

struct MixtureComponent {
  double a = 0.0;
  double b = 0.0;
  double sigma = 1.0;
  double w = 1.0;
};

struct MixtureModel {
  std::vector<MixtureComponent> components;

  int K() const { return static_cast<int>(components.size()); }
  double mean_time(int k, double distance) const {
    const auto& c = components[static_cast<std::size_t>(k)];
    return c.a + c.b * distance;
  }
};

/// Reads `distance_km,time_min` CSV; leading `#` lines are skipped.
/// ParseError names the offending line.
std::vector<StopPair> read_pairs_csv(std::istream& is);
std::vector<StopPair> read_pairs_csv(const std::string& path);
void write_pairs_csv(std::ostream& os, std::span<const StopPair> rows);

struct DataSplit {
  std::vector<StopPair> train;
  std::vector<StopPair> test;
};

/// Keeps distance >= 2 and time > 0, trims floor(2.5%) of pairs from each
/// tail of time/distance, shuffles with `seed` and cuts 70/30.
DataSplit load_and_clean(std::span<const StopPair> rows, std::uint64_t seed);

struct EmFit {
  MixtureModel model;
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
  int reseeds = 0;
};

using EmObserver = std::function<void(int iteration, const MixtureModel& model)>;

/// Mixture of K linear regressions time = a_k + b_k distance + N(0, sigma_k^2)
/// with a_k, b_k >= 0 and 1e-6 <= sigma_k <= 3 * mean training distance.
EmFit fit_mixture_em(std::span<const StopPair> train, int K, std::uint64_t seed, int max_iter = 1000,
                     const EmObserver& observer = {});

double mixture_log_likelihood(const MixtureModel& model, std::span<const StopPair> data);

/// 0-based index of the component with the largest posterior; ties go to the
/// lowest index. Weights need not be normalized.
int map_assign(const MixtureModel& model, const StopPair& pair);

struct SampledLeg {
  TravelTimeDist dist;
  double realized;
  int component;
  StopPair pair;
};

/// n pairs drawn uniformly with replacement from `test`; each becomes a
/// Normal leg of its MAP component with the recorded time as realization.
std::vector<SampledLeg> sample_route(const MixtureModel& model, std::span<const StopPair> test,
                                     int n, std::uint64_t seed);

/// Pairs from a fixed mixture of three lines, distances uniform on [1, 12] km.
std::vector<StopPair> generate_synthetic(int n, std::uint64_t seed);

std::string model_to_json(const MixtureModel& model);
MixtureModel model_from_json(const std::string& text);

}  // namespace twopt

#endif  // TWOPT_DATAFIT_HPP
