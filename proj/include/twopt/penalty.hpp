#ifndef TWOPT_PENALTY_HPP
#define TWOPT_PENALTY_HPP

namespace twopt {

/// Window-width penalty: alpha * d (linear) or (alpha / beta) * d^beta (power,
/// beta > 1, strictly convex).
class Penalty {
 public:
  enum class Kind { Linear, Power };

  static Penalty linear(double alpha);
  static Penalty power(double alpha, double beta);

  Kind kind() const { return kind_; }
  bool is_linear() const { return kind_ == Kind::Linear; }
  double alpha() const { return alpha_; }
  /// 1 for Linear.
  double beta() const { return beta_; }

  double value(double width) const;
  /// g(d) = P'(d).
  double derivative(double width) const;
  double second_derivative(double width) const;
  /// g^{-1}(x) for the power penalty: (x / alpha)^(1 / (beta - 1)).
  double inverse_derivative(double x) const;

  bool operator==(const Penalty&) const = default;

 private:
  Penalty(Kind kind, double alpha, double beta) : kind_(kind), alpha_(alpha), beta_(beta) {}

  Kind kind_;
  double alpha_;
  double beta_;
};

}  // namespace twopt

#endif  // TWOPT_PENALTY_HPP
