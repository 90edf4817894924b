#include "twopt/uwos.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "roots.hpp"
#include "twopt/errors.hpp"

namespace twopt {

Schedule UwosSolution::schedule() const {
  Schedule s;
  s.windows.reserve(static_cast<std::size_t>(starts.size()));
  for (Eigen::Index i = 0; i < starts.size(); ++i) s.windows.push_back({starts(i), width});
  s.feasible = starts_nondecreasing(s.windows);
  return s;
}

namespace {

double start_step(const ArrivalDist& F, double omega, double width) {
  const auto h = [&](double t) { return (1.0 - omega) * F.cdf(t) - omega * (1.0 - F.cdf(t + width)); };
  const double lo = F.quantile(1e-12) - width;
  const double hi = F.quantile(1.0 - 1e-12);
  return std::max(0.0, detail::bisect_increasing(h, lo, hi));
}

double width_step(std::span<const ArrivalDist> arrivals, double omega, const Penalty& penalty,
                  const Eigen::VectorXd& t) {
  const double n = static_cast<double>(arrivals.size());
  // K(d) = n P'(d) - omega * sum(1 - F_i(t_i + d)), nondecreasing in d
  const auto K = [&](double d) {
    double late = 0.0;
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
      late += 1.0 - arrivals[i].cdf(t(static_cast<Eigen::Index>(i)) + d);
    }
    return n * penalty.derivative(d) - omega * late;
  };
  const double k0 = K(0.0);
  if (k0 >= 0.0) return 0.0;
  double qmax = arrivals.front().quantile(1.0 - 1e-9);
  for (const auto& F : arrivals) qmax = std::max(qmax, F.quantile(1.0 - 1e-9));
  double hi = std::max(qmax - t.minCoeff(), 1e-6);
  double khi = K(hi);
  for (int k = 0; khi < 0.0 && k < 60; ++k) {
    hi *= 2.0;
    khi = K(hi);
  }
  if (khi < 0.0) throw NoBracket("uniform width equation has no bracket");
  return detail::bisect_increasing(K, 0.0, hi, k0, khi);
}

}  // namespace

Eigen::VectorXd uwos_residuals(std::span<const ArrivalDist> arrivals, double omega,
                               const Penalty& penalty, const Eigen::VectorXd& starts,
                               double width) {
  const auto n = static_cast<Eigen::Index>(arrivals.size());
  Eigen::VectorXd r(n + 1);
  double late_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const ArrivalDist& F = arrivals[static_cast<std::size_t>(i)];
    const double late = omega * (1.0 - F.cdf(starts(i) + width));
    late_sum += late;
    double ri = (1.0 - omega) * F.cdf(starts(i)) - late;
    if (starts(i) <= 0.0 && ri > 0.0) ri = 0.0;
    r(i) = ri;
  }
  double rw = late_sum - static_cast<double>(n) * penalty.derivative(width);
  if (width <= 0.0 && rw < 0.0) rw = 0.0;
  r(n) = rw;
  return r;
}

UwosSolution solve_uwos(std::span<const ArrivalDist> arrivals, double omega,
                        const Penalty& penalty, double tol, int max_iter) {
  if (arrivals.empty()) throw DomainError("uniform-width solver needs at least one client");
  if (!(omega > 0.0 && omega < 1.0)) throw DomainError("omega must lie in (0,1)");
  if (penalty.is_linear() && penalty.alpha() > std::min(omega, 1.0 - omega)) {
    throw NoStationaryPoint("linear penalty needs alpha <= min{omega, 1-omega}; got alpha=" +
                            std::to_string(penalty.alpha()) + ", omega=" + std::to_string(omega));
  }
  const auto n = static_cast<Eigen::Index>(arrivals.size());
  if (n == 1) {
    const auto rep = solve_client(arrivals[0], omega, penalty);
    UwosSolution one;
    one.starts = Eigen::VectorXd::Constant(1, rep.window.start);
    one.width = rep.window.width;
    one.max_residual = uwos_residuals(arrivals, omega, penalty, one.starts, one.width).cwiseAbs().maxCoeff();
    return one;
  }

  double alpha_eff = penalty.alpha();
  if (!penalty.is_linear()) {
    double mean_width = 0.0;
    for (const auto& F : arrivals) mean_width += solve_client_convex(F, omega, penalty).window.width;
    alpha_eff = penalty.derivative(mean_width / static_cast<double>(n));
  }
  alpha_eff = std::min(alpha_eff, omega * (1.0 - omega) * (1.0 - 1e-9));
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t(i) = solve_client_linear(arrivals[static_cast<std::size_t>(i)], omega, alpha_eff).start;
  }

  UwosSolution sol;
  double width = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    width = width_step(arrivals, omega, penalty, t);
    for (Eigen::Index i = 0; i < n; ++i) t(i) = start_step(arrivals[static_cast<std::size_t>(i)], omega, width);

    const double res = uwos_residuals(arrivals, omega, penalty, t, width).cwiseAbs().maxCoeff();
    sol.iterations = it;
    sol.max_residual = res;
    if (res <= tol) {
      sol.starts = t;
      sol.width = width;
      return sol;
    }
  }
  throw NonConvergence("uniform-width alternation did not converge in " + std::to_string(max_iter) +
                       " iterations; max residual " + std::to_string(sol.max_residual) +
                       ", width " + std::to_string(width));
}

}  // namespace twopt
