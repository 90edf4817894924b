#include "twopt/wos.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "roots.hpp"
#include "twopt/errors.hpp"

namespace twopt {

namespace {

void check_omega(double omega) {
  if (!(omega > 0.0 && omega < 1.0)) {
    throw DomainError("omega must lie in (0,1), got " + std::to_string(omega));
  }
}

}  // namespace

Window solve_client_linear(const ArrivalDist& F, double omega, double alpha) {
  check_omega(omega);
  if (!(alpha > 0.0)) throw DomainError("penalty alpha must be > 0");
  if (alpha > std::min(omega, 1.0 - omega)) {
    throw NoStationaryPoint("linear penalty needs alpha <= min{omega, 1-omega}; got alpha=" +
                            std::to_string(alpha) + ", omega=" + std::to_string(omega));
  }
  if (alpha >= omega * (1.0 - omega)) {
    const double t = std::max(0.0, F.quantile(omega));
    return {t, 0.0};
  }
  const double raw_start = F.quantile(alpha / (1.0 - omega));
  const double end = F.quantile(1.0 - alpha / omega);
  const double start = std::max(0.0, raw_start);
  return {start, std::max(0.0, end - start)};
}

SolveReport solve_client_convex(const ArrivalDist& F, double omega, const Penalty& penalty) {
  check_omega(omega);
  if (penalty.is_linear()) {
    throw NonConvexPenalty("convex solver needs a strictly convex penalty; use the linear closed form");
  }
  const auto width_at = [&](double t) { return penalty.inverse_derivative((1.0 - omega) * F.cdf(t)); };
  const auto h = [&](double t) {
    return (1.0 - omega) * F.cdf(t) - omega * (1.0 - F.cdf(t + width_at(t)));
  };

  double lo = F.quantile(1e-9);
  double hi = F.quantile(1.0 - 1e-9);
  double hlo = h(lo);
  double hhi = h(hi);
  if (hlo > 0.0 || hhi < 0.0) {
    lo = std::min(lo, F.mean() - 8.0 * F.sd());
    hi = std::max(hi, F.mean() + 8.0 * F.sd());
    hlo = h(lo);
    hhi = h(hi);
    if (hlo > 0.0 || hhi < 0.0) {
      throw NoBracket("no sign change of the first-order reduction on [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "]");
    }
  }
  double t = detail::bisect_increasing(h, lo, hi, hlo, hhi);

  // Newton polish, kept only when it reduces |h|.
  {
    const double d = width_at(t);
    const double f0 = F.pdf(t);
    const double f1 = F.pdf(t + d);
    const double p2 = penalty.second_derivative(d);
    const double dprime = std::isfinite(p2) && p2 > 0.0 ? (1.0 - omega) * f0 / p2 : 0.0;
    const double slope = (1.0 - omega) * f0 + omega * f1 * (1.0 + dprime);
    if (slope > 0.0 && std::isfinite(slope)) {
      const double cand = t - h(t) / slope;
      if (cand > lo && cand < hi && std::abs(h(cand)) < std::abs(h(t))) t = cand;
    }
  }

  Window w{t, width_at(t)};
  if (t < 0.0) {
    // Start pinned at 0: only the width condition remains.
    const auto k = [&](double d) { return penalty.derivative(d) - omega * (1.0 - F.cdf(d)); };
    const double dhi = std::max(penalty.inverse_derivative(omega), 1e-12);
    w = {0.0, detail::bisect_increasing(k, 0.0, dhi)};
  }

  SolveReport rep;
  rep.window = w;
  const auto foc = foc_values(F, omega, penalty, w);
  rep.foc_residuals = {std::abs(foc[0]), std::abs(foc[1])};
  rep.hessian_ok = diagonally_dominant(hessian(F, omega, penalty, w));
  return rep;
}

SolveReport solve_client(const ArrivalDist& F, double omega, const Penalty& penalty) {
  if (!penalty.is_linear()) return solve_client_convex(F, omega, penalty);
  SolveReport rep;
  rep.window = solve_client_linear(F, omega, penalty.alpha());
  const auto foc = foc_values(F, omega, penalty, rep.window);
  rep.foc_residuals = {std::abs(foc[0]), std::abs(foc[1])};
  rep.hessian_ok = diagonally_dominant(hessian(F, omega, penalty, rep.window));
  return rep;
}

Schedule solve_schedule(std::span<const ArrivalDist> arrivals, double omega,
                        const Penalty& penalty) {
  Schedule s;
  s.windows.reserve(arrivals.size());
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    try {
      s.windows.push_back(solve_client(arrivals[i], omega, penalty).window);
    } catch (const Error& e) {
      rethrow_with_context(e, "client " + std::to_string(i + 1));
    }
  }
  s.feasible = starts_nondecreasing(s.windows);
  return s;
}

std::array<double, 2> foc_values(const ArrivalDist& F, double omega, const Penalty& penalty,
                                 const Window& w) {
  const double late = omega * (1.0 - F.cdf(w.end()));
  return {(1.0 - omega) * F.cdf(w.start) - late, -late + penalty.derivative(w.width)};
}

Eigen::Matrix2d hessian(const ArrivalDist& F, double omega, const Penalty& penalty,
                        const Window& w) {
  const double a = omega * F.pdf(w.end());
  Eigen::Matrix2d h;
  h << (1.0 - omega) * F.pdf(w.start) + a, a,
       a, a + penalty.second_derivative(w.width);
  return h;
}

bool diagonally_dominant(const Eigen::Matrix2d& h) {
  const double off = std::abs(h(0, 1));
  const double r0 = h(0, 0) - off;
  const double r1 = h(1, 1) - off;
  return h(0, 0) > 0.0 && h(1, 1) > 0.0 && r0 >= 0.0 && r1 >= 0.0 && (r0 > 0.0 || r1 > 0.0);
}

bool starts_nondecreasing(const std::vector<Window>& windows) {
  for (std::size_t i = 1; i < windows.size(); ++i) {
    if (windows[i].start < windows[i - 1].start) return false;
  }
  return true;
}

}  // namespace twopt
