#ifndef TWOPT_DISTS_HPP
#define TWOPT_DISTS_HPP

#include <optional>
#include <string>

#include <Eigen/Core>

namespace twopt {

/// Mass on a uniform grid origin, origin+step, ... . Weights are renormalized
/// on construction; negative or non-finite weights are rejected.
class DiscretePMF {
 public:
  DiscretePMF(double origin, double step, Eigen::VectorXd weights);

  double origin() const { return origin_; }
  double step() const { return step_; }
  Eigen::Index size() const { return weights_.size(); }
  const Eigen::VectorXd& weights() const { return weights_; }
  /// cumulative()(k) = weights(0) + ... + weights(k).
  const Eigen::VectorXd& cumulative() const { return cumulative_; }
  double point(Eigen::Index k) const { return origin_ + static_cast<double>(k) * step_; }
  double back() const { return point(size() - 1); }

  double mean() const { return mean_; }
  double variance() const { return variance_; }

  /// Right-continuous step CDF.
  double cdf(double t) const;
  /// Smallest grid point with cdf >= p, for p in (0,1].
  double quantile(double p) const;

 private:
  double origin_;
  double step_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd cumulative_;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

enum class Family { Normal, Lognormal, Weibull, Empirical };

const char* to_string(Family family);
Family family_from_string(const std::string& name);

/// One leg's travel time. Parametric families are built from (mean, sd);
/// Lognormal and Weibull parameters are obtained by moment matching.
class TravelTimeDist {
 public:
  static TravelTimeDist normal(double mean, double sd);
  static TravelTimeDist lognormal(double mean, double sd);
  static TravelTimeDist weibull(double mean, double sd);
  static TravelTimeDist empirical(DiscretePMF pmf);
  /// Dispatches to the factory for `family` (not Empirical).
  static TravelTimeDist from_moments(Family family, double mean, double sd);

  Family family() const { return family_; }
  double mean() const { return mean_; }
  double sd() const { return sd_; }
  double variance() const { return sd_ * sd_; }

  double cdf(double t) const;
  /// P(B > t).
  double ccdf(double t) const;
  /// Density; 0 for Empirical.
  double pdf(double t) const;
  double quantile(double p) const;

  /// Lognormal: parameters of log B.
  double log_mean() const { return a_; }
  double log_sd() const { return b_; }
  /// Weibull: shape k and scale lambda.
  double weibull_shape() const { return a_; }
  double weibull_scale() const { return b_; }
  const DiscretePMF* pmf() const { return pmf_ ? &*pmf_ : nullptr; }

 private:
  TravelTimeDist(Family f, double mean, double sd, double a, double b)
      : family_(f), mean_(mean), sd_(sd), a_(a), b_(b) {}

  Family family_;
  double mean_;
  double sd_;
  double a_;
  double b_;
  std::optional<DiscretePMF> pmf_;
};

/// Moments of a normal proxy.
struct NormalMoments {
  double mean;
  double variance;
};

/// Remaining duration of a leg that has already been under way for `elapsed`
/// time units: P(R > t) = P(B > t + b) / P(B > b).
class ResidualDist {
 public:
  ResidualDist(TravelTimeDist base, double elapsed);

  const TravelTimeDist& base() const { return base_; }
  double elapsed() const { return elapsed_; }
  /// P(B > b).
  double survival() const { return survival_; }

  /// For a Normal base: mean and variance of B | B > b (the conditioned leg
  /// duration measured from the start of the leg, not from now).
  const std::optional<NormalMoments>& as_normal() const { return as_normal_; }

  double ccdf(double t) const;
  double cdf(double t) const { return 1.0 - ccdf(t); }
  double quantile(double p) const;
  /// Moments of the remaining time R (so mean() = E[B | B > b] - b).
  double mean() const { return mean_; }
  double variance() const { return variance_; }

 private:
  TravelTimeDist base_;
  double elapsed_;
  double survival_;
  std::optional<NormalMoments> as_normal_;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

double eval_cdf(const TravelTimeDist& dist, double t);
double eval_cdf(const DiscretePMF& dist, double t);
double eval_quantile(const TravelTimeDist& dist, double p);
double eval_quantile(const DiscretePMF& dist, double p);

/// Bins `dist` on the grid mean + j*step, |j| <= floor(k*sd/step), dropping
/// negative grid points. Each point carries the CDF increment over
/// [x - step/2, x + step/2]; the result is renormalized.
DiscretePMF discretize(const TravelTimeDist& dist, double step, double half_width_sigmas);
/// Same grid rule for a residual leg, centred on its remaining mean.
DiscretePMF discretize(const ResidualDist& dist, double step, double half_width_sigmas);

/// Exact discrete convolution (direct sum for small inputs, FFT otherwise).
DiscretePMF convolve(const DiscretePMF& a, const DiscretePMF& b);

/// Coarsens `pmf` so it has at most max_bins points by moving to an integer
/// multiple of the step; each mass is split linearly between neighbours.
DiscretePMF rebin(const DiscretePMF& pmf, Eigen::Index max_bins);

ResidualDist condition_on_elapsed(const TravelTimeDist& dist, double elapsed);

/// Normal travel times with sd >= mean/3 put non-negligible mass on negatives.
bool normal_has_negative_mass(double mean, double sd);

}  // namespace twopt

#endif  // TWOPT_DISTS_HPP
