#ifndef TWOPT_ARRIVAL_HPP
#define TWOPT_ARRIVAL_HPP

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "twopt/dists.hpp"

namespace twopt {

/// Distribution of a client's arrival time S_i: either an exact/proxy normal
/// or a grid PMF from numerical convolution.
///
/// Grid arrivals are read as histograms (each grid mass spread uniformly over
/// its bin), which makes cdf() continuous and piecewise linear. The root
/// finders need that continuity; grid-point values coincide with the PMF's
/// cumulative sums shifted by half a bin.
class ArrivalDist {
 public:
  enum class Kind { ParamNormal, Grid };

  static ArrivalDist normal(double mean, double sd);
  static ArrivalDist grid(DiscretePMF pmf);

  Kind kind() const { return kind_; }
  bool is_normal() const { return kind_ == Kind::ParamNormal; }
  double mean() const { return mean_; }
  double variance() const { return sd_ * sd_; }
  double sd() const { return sd_; }
  const DiscretePMF* pmf() const { return pmf_ ? &*pmf_ : nullptr; }

  double cdf(double t) const;
  double pdf(double t) const;
  /// Inverse of cdf(); p in (0,1).
  double quantile(double p) const;

  /// Same distribution moved by `offset` time units.
  ArrivalDist shifted(double offset) const;

 private:
  ArrivalDist(Kind kind, double mean, double sd) : kind_(kind), mean_(mean), sd_(sd) {}

  Kind kind_;
  double mean_;
  double sd_;
  std::optional<DiscretePMF> pmf_;
};

/// How F_1..F_n are computed.
struct ArrivalEngine {
  enum class Mode { ExactNormal, Convolution, Hybrid };

  Mode mode = Mode::ExactNormal;
  double step = 1e-3;
  double half_width_sigmas = 4.0;
  /// Hybrid: clients with 1-based index >= i0 get a moment-matched normal.
  int i0 = 15;
  /// After each convolution the PMF is coarsened to at most this many bins; 0 = off.
  Eigen::Index max_bins = 0;

  static ArrivalEngine exact_normal() { return {}; }
  static ArrivalEngine convolution(double step = 1e-3, double k = 4.0) {
    return {Mode::Convolution, step, k, 15, 0};
  }
  static ArrivalEngine hybrid(int i0 = 15, double step = 1e-3, double k = 4.0) {
    return {Mode::Hybrid, step, k, i0, 0};
  }

  void validate() const;
};

const char* to_string(ArrivalEngine::Mode mode);
ArrivalEngine::Mode engine_mode_from_string(const std::string& name);

/// A route leg as seen at some point of the tour: a fresh leg, or the one in
/// service with elapsed time already known.
using RouteLeg = std::variant<TravelTimeDist, ResidualDist>;

std::vector<ArrivalDist> build_arrivals(std::span<const TravelTimeDist> legs,
                                        const ArrivalEngine& engine);
std::vector<ArrivalDist> build_arrivals(std::span<const RouteLeg> legs,
                                        const ArrivalEngine& engine);

}  // namespace twopt

#endif  // TWOPT_ARRIVAL_HPP
