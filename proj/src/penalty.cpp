#include "twopt/penalty.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "twopt/errors.hpp"

namespace twopt {

Penalty Penalty::linear(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("penalty alpha must be > 0");
  return Penalty(Kind::Linear, alpha, 1.0);
}

Penalty Penalty::power(double alpha, double beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("penalty alpha must be > 0");
  if (!(beta > 1.0) || !std::isfinite(beta)) {
    throw DomainError("power penalty needs beta > 1 for strict convexity, got " +
                      std::to_string(beta));
  }
  return Penalty(Kind::Power, alpha, beta);
}

double Penalty::value(double width) const {
  if (kind_ == Kind::Linear) return alpha_ * width;
  return alpha_ / beta_ * std::pow(width, beta_);
}

double Penalty::derivative(double width) const {
  if (kind_ == Kind::Linear) return alpha_;
  return alpha_ * std::pow(width, beta_ - 1.0);
}

double Penalty::second_derivative(double width) const {
  if (kind_ == Kind::Linear) return 0.0;
  if (width <= 0.0) {
    return beta_ < 2.0 ? std::numeric_limits<double>::infinity() : (beta_ == 2.0 ? alpha_ : 0.0);
  }
  return alpha_ * (beta_ - 1.0) * std::pow(width, beta_ - 2.0);
}

double Penalty::inverse_derivative(double x) const {
  if (kind_ == Kind::Linear) throw NonConvexPenalty("linear penalty has no inverse derivative");
  if (x <= 0.0) return 0.0;
  return std::pow(x / alpha_, 1.0 / (beta_ - 1.0));
}

}  // namespace twopt
