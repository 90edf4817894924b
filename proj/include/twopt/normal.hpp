#ifndef TWOPT_NORMAL_HPP
#define TWOPT_NORMAL_HPP

// Standard normal primitives shared by every module.

namespace twopt {

double normal_pdf(double z);
double normal_cdf(double z);
/// Upper tail 1 - Phi(z), evaluated without cancellation.
double normal_ccdf(double z);
/// Phi^{-1}(p) for p in (0,1); DomainError otherwise.
double normal_quantile(double p);

/// phi(z) / (1 - Phi(z)). Switches to a continued fraction for z > 6, where
/// the direct ratio loses digits and eventually becomes 0/0.
double inverse_mills_ratio(double z);

/// E[(X - c)^+] for X ~ N(mean, sd^2).
double normal_expected_excess(double mean, double sd, double c);
/// E[(c - X)^+] for X ~ N(mean, sd^2).
double normal_expected_shortfall(double mean, double sd, double c);

}  // namespace twopt

#endif  // TWOPT_NORMAL_HPP
