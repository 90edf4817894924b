#ifndef TWOPT_WOS_HPP
#define TWOPT_WOS_HPP

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "twopt/arrival.hpp"
#include "twopt/penalty.hpp"

namespace twopt {

struct Window {
  double start = 0.0;
  double width = 0.0;

  double end() const { return start + width; }
  bool operator==(const Window&) const = default;
};

/// Per-client windows. `feasible` records whether starts are nondecreasing.
struct Schedule {
  std::vector<Window> windows;
  bool feasible = true;

  std::size_t size() const { return windows.size(); }
};

struct SolveReport {
  Window window;
  /// |FOC1|, |FOC2| at the returned window.
  std::array<double, 2> foc_residuals{0.0, 0.0};
  bool hessian_ok = false;
};

/// Closed form for the linear penalty. The start is clipped at 0 while the
/// end is kept. When alpha > omega (1 - omega) the two quantiles cross and the
/// optimum is the zero-width window at F^{-1}(omega).
Window solve_client_linear(const ArrivalDist& F, double omega, double alpha);

/// Root-finding solver for a strictly convex (power) penalty.
SolveReport solve_client_convex(const ArrivalDist& F, double omega, const Penalty& penalty);

/// Dispatches on the penalty and returns the report for either path.
SolveReport solve_client(const ArrivalDist& F, double omega, const Penalty& penalty);

Schedule solve_schedule(std::span<const ArrivalDist> arrivals, double omega,
                        const Penalty& penalty);

/// FOC1 = (1-w) F(t) - w (1 - F(t+d)),  FOC2 = -w (1 - F(t+d)) + P'(d).
std::array<double, 2> foc_values(const ArrivalDist& F, double omega, const Penalty& penalty,
                                 const Window& w);

/// Hessian of the single-client objective in (t, d).
Eigen::Matrix2d hessian(const ArrivalDist& F, double omega, const Penalty& penalty,
                        const Window& w);

/// Positive diagonal, weak dominance in both rows, strict in at least one.
bool diagonally_dominant(const Eigen::Matrix2d& h);

/// True when starts are nondecreasing.
bool starts_nondecreasing(const std::vector<Window>& windows);

}  // namespace twopt

#endif  // TWOPT_WOS_HPP
