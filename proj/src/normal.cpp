#include "twopt/normal.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "twopt/errors.hpp"

namespace twopt {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440084436210484903928;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438186847585863;
}  // namespace

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double normal_ccdf(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal quantile requires p in (0,1), got " + std::to_string(p));
  }
  // erfc_inv keeps full relative accuracy in both tails.
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double inverse_mills_ratio(double z) {
  if (z <= 6.0) return normal_pdf(z) / normal_ccdf(z);
  // Laplace continued fraction: (1-Phi)/phi = 1/(z+1/(z+2/(z+3/(z+...)))).
  double d = z;
  for (int k = 80; k >= 1; --k) d = z + k / d;
  return d;
}

double normal_expected_excess(double mean, double sd, double c) {
  const double d = (mean - c) / sd;
  return sd * (d * normal_cdf(d) + normal_pdf(d));
}

double normal_expected_shortfall(double mean, double sd, double c) {
  const double d = (c - mean) / sd;
  return sd * (d * normal_cdf(d) + normal_pdf(d));
}

}  // namespace twopt
