#ifndef TWOPT_SRC_ROOTS_HPP
#define TWOPT_SRC_ROOTS_HPP

#include <cmath>

namespace twopt::detail {

/// Root of an increasing function on [lo, hi] with f(lo) <= 0 <= f(hi), by
/// bisection until the bracket collapses to adjacent doubles. Returns the
/// endpoint with the smaller |f|.
template <class F>
double bisect_increasing(F&& f, double lo, double hi, double flo, double fhi) {
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (fm < 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  return std::abs(flo) <= std::abs(fhi) ? lo : hi;
}

template <class F>
double bisect_increasing(F&& f, double lo, double hi) {
  return bisect_increasing(f, lo, hi, f(lo), f(hi));
}

}  // namespace twopt::detail

#endif  // TWOPT_SRC_ROOTS_HPP
