#ifndef TWOPT_UWOS_HPP
#define TWOPT_UWOS_HPP

#include <span>

#include <Eigen/Core>

#include "twopt/arrival.hpp"
#include "twopt/penalty.hpp"
#include "twopt/wos.hpp"

namespace twopt {

struct UwosSolution {
  Eigen::VectorXd starts;
  double width = 0.0;
  int iterations = 0;
  double max_residual = 0.0;

  Schedule schedule() const;
};

/// Shared-width windows. Alternates a width step (the minimizing width for the
/// current starts, found by bisection) with per-client start steps until every
/// first-order residual is <= tol.
UwosSolution solve_uwos(std::span<const ArrivalDist> arrivals, double omega,
                        const Penalty& penalty, double tol = 1e-9, int max_iter = 500);

/// The n+1 residuals (start conditions first, width condition last).
Eigen::VectorXd uwos_residuals(std::span<const ArrivalDist> arrivals, double omega,
                               const Penalty& penalty, const Eigen::VectorXd& starts,
                               double width);

}  // namespace twopt

#endif  // TWOPT_UWOS_HPP
