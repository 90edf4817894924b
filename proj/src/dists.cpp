#include "twopt/dists.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <fftw3.h>

#include "twopt/errors.hpp"
#include "twopt/normal.hpp"

namespace twopt {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

void require_moments(double mean, double sd) {
  if (!(std::isfinite(mean) && mean > 0.0 && std::isfinite(sd) && sd > 0.0)) {
    throw DomainError("travel time needs mean > 0 and sd > 0, got mean=" + fmt(mean) +
                      " sd=" + fmt(sd));
  }
}

// Squared coefficient of variation of a Weibull with shape k.
double weibull_cv2(double k) {
  return std::exp(std::lgamma(1.0 + 2.0 / k) - 2.0 * std::lgamma(1.0 + 1.0 / k)) - 1.0;
}

double weibull_shape_for_cv(double cv) {
  const double target = cv * cv;
  double lo = 1e-2;
  double hi = 1e3;
  if (!(weibull_cv2(lo) > target && weibull_cv2(hi) < target)) {
    throw DomainError("Weibull coefficient of variation out of range: " + fmt(cv));
  }
  // cv2 is decreasing in k; bisect until the bracket stops shrinking.
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (weibull_cv2(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void require_probability_open(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("quantile requires p in (0,1), got " + fmt(p));
  }
}

// Grid points mean + j*step for |j| <= J, keeping only nonnegative points.
struct Grid {
  Eigen::Index first_j;
  Eigen::Index last_j;
};

Grid symmetric_grid(double center, double sd, double step, double k) {
  if (!(step > 0.0) || !std::isfinite(step) || !(k > 0.0) || !std::isfinite(k)) {
    throw DomainError("discretize needs step > 0 and k > 0");
  }
  if (!(step < 2.0 * k * sd)) {
    throw DomainError("discretize: step " + fmt(step) + " leaves fewer than two bins for " +
                      "half-width " + fmt(k * sd));
  }
  const auto half = static_cast<Eigen::Index>(std::floor(k * sd / step + 1e-9));
  Eigen::Index first = -half;
  if (center - static_cast<double>(half) * step < 0.0) {
    first = -static_cast<Eigen::Index>(std::floor(center / step));
  }
  return {first, half};
}

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

Eigen::VectorXd fft_convolve(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index out = a.size() + b.size() - 1;
  Eigen::Index n = 1;
  while (n < out) n <<= 1;
  const Eigen::Index nc = n / 2 + 1;

  std::unique_ptr<double, FftwFree> ra(fftw_alloc_real(n));
  std::unique_ptr<double, FftwFree> rb(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwFree> ca(fftw_alloc_complex(nc));
  std::unique_ptr<fftw_complex, FftwFree> cb(fftw_alloc_complex(nc));

  fftw_plan fa;
  fftw_plan fb;
  fftw_plan inv;
  {
    std::lock_guard lock(fftw_planner_mutex());
    fa = fftw_plan_dft_r2c_1d(static_cast<int>(n), ra.get(), ca.get(), FFTW_ESTIMATE);
    fb = fftw_plan_dft_r2c_1d(static_cast<int>(n), rb.get(), cb.get(), FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), ca.get(), ra.get(), FFTW_ESTIMATE);
  }
  std::fill(ra.get(), ra.get() + n, 0.0);
  std::fill(rb.get(), rb.get() + n, 0.0);
  std::copy(a.data(), a.data() + a.size(), ra.get());
  std::copy(b.data(), b.data() + b.size(), rb.get());
  fftw_execute(fa);
  fftw_execute(fb);
  for (Eigen::Index i = 0; i < nc; ++i) {
    const double re = ca.get()[i][0] * cb.get()[i][0] - ca.get()[i][1] * cb.get()[i][1];
    const double im = ca.get()[i][0] * cb.get()[i][1] + ca.get()[i][1] * cb.get()[i][0];
    ca.get()[i][0] = re;
    ca.get()[i][1] = im;
  }
  fftw_execute(inv);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fa);
    fftw_destroy_plan(fb);
    fftw_destroy_plan(inv);
  }
  Eigen::VectorXd r(out);
  const double scale = 1.0 / static_cast<double>(n);
  // Round-off floor of the transform; outputs below it are noise.
  const double floor = 8.0 * std::numeric_limits<double>::epsilon() *
                       std::log2(static_cast<double>(n)) * a.norm() * b.norm();
  for (Eigen::Index i = 0; i < out; ++i) {
    const double v = ra.get()[i] * scale;
    r(i) = v > floor ? v : 0.0;
  }
  return r;
}

Eigen::VectorXd direct_convolve(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(a.size() + b.size() - 1);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) == 0.0) continue;
    r.segment(i, b.size()) += a(i) * b;
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// DiscretePMF

DiscretePMF::DiscretePMF(double origin, double step, Eigen::VectorXd weights)
    : origin_(origin), step_(step), weights_(std::move(weights)) {
  if (!std::isfinite(origin_) || !(step_ > 0.0) || !std::isfinite(step_)) {
    throw DomainError("PMF needs a finite origin and step > 0");
  }
  if (weights_.size() == 0) throw DomainError("PMF needs at least one weight");
  if (!weights_.allFinite() || (weights_.array() < 0.0).any()) {
    throw DomainError("PMF weights must be finite and nonnegative");
  }
  const double total = weights_.sum();
  if (!(total > 0.0)) throw DomainError("PMF weights sum to zero");
  weights_ /= total;

  cumulative_.resize(weights_.size());
  std::partial_sum(weights_.data(), weights_.data() + weights_.size(), cumulative_.data());

  const Eigen::VectorXd idx = Eigen::VectorXd::LinSpaced(size(), 0.0, static_cast<double>(size() - 1));
  const double mean_idx = weights_.dot(idx);
  mean_ = origin_ + step_ * mean_idx;
  variance_ = step_ * step_ * weights_.dot((idx.array() - mean_idx).square().matrix());
}

double DiscretePMF::cdf(double t) const {
  if (t < origin_) {
    // Tolerate round-off right at the first point.
    if (origin_ - t > 1e-9 * step_) return 0.0;
  }
  const double r = (t - origin_) / step_;
  const auto k = static_cast<Eigen::Index>(std::floor(r + 1e-9));
  if (k < 0) return 0.0;
  if (k >= size() - 1) return 1.0;
  return std::clamp(cumulative_(k), 0.0, 1.0);
}

double DiscretePMF::quantile(double p) const {
  if (!(p > 0.0 && p <= 1.0)) {
    throw DomainError("PMF quantile requires p in (0,1], got " + fmt(p));
  }
  const double* begin = cumulative_.data();
  const double* end = begin + cumulative_.size();
  const double* it = std::lower_bound(begin, end, p);
  if (it == end) return back();
  return point(it - begin);
}

// ---------------------------------------------------------------------------
// Families

const char* to_string(Family family) {
  switch (family) {
    case Family::Normal: return "normal";
    case Family::Lognormal: return "lognormal";
    case Family::Weibull: return "weibull";
    case Family::Empirical: return "empirical";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "normal") return Family::Normal;
  if (name == "lognormal") return Family::Lognormal;
  if (name == "weibull") return Family::Weibull;
  if (name == "empirical") return Family::Empirical;
  throw DomainError("unknown travel-time family '" + name + "'");
}

bool normal_has_negative_mass(double mean, double sd) { return sd >= mean / 3.0; }

TravelTimeDist TravelTimeDist::normal(double mean, double sd) {
  require_moments(mean, sd);
  if (normal_has_negative_mass(mean, sd)) {
    warn("Normal(" + fmt(mean) + ", " + fmt(sd) +
         ") has sd >= mean/3; mass on negative travel times is not negligible");
  }
  return TravelTimeDist(Family::Normal, mean, sd, mean, sd);
}

TravelTimeDist TravelTimeDist::lognormal(double mean, double sd) {
  require_moments(mean, sd);
  const double cv = sd / mean;
  const double s2 = std::log1p(cv * cv);
  return TravelTimeDist(Family::Lognormal, mean, sd, std::log(mean) - 0.5 * s2, std::sqrt(s2));
}

TravelTimeDist TravelTimeDist::weibull(double mean, double sd) {
  require_moments(mean, sd);
  const double k = weibull_shape_for_cv(sd / mean);
  const double scale = mean / std::exp(std::lgamma(1.0 + 1.0 / k));
  return TravelTimeDist(Family::Weibull, mean, sd, k, scale);
}

TravelTimeDist TravelTimeDist::empirical(DiscretePMF pmf) {
  const double mean = pmf.mean();
  const double sd = std::sqrt(pmf.variance());
  TravelTimeDist d(Family::Empirical, mean, sd, 0.0, 0.0);
  d.pmf_ = std::move(pmf);
  return d;
}

TravelTimeDist TravelTimeDist::from_moments(Family family, double mean, double sd) {
  switch (family) {
    case Family::Normal: return normal(mean, sd);
    case Family::Lognormal: return lognormal(mean, sd);
    case Family::Weibull: return weibull(mean, sd);
    case Family::Empirical: break;
  }
  throw DomainError("empirical travel times cannot be built from moments");
}

double TravelTimeDist::cdf(double t) const {
  switch (family_) {
    case Family::Normal: return normal_cdf((t - a_) / b_);
    case Family::Lognormal: return t <= 0.0 ? 0.0 : normal_cdf((std::log(t) - a_) / b_);
    case Family::Weibull: return t <= 0.0 ? 0.0 : -std::expm1(-std::pow(t / b_, a_));
    case Family::Empirical: return pmf_->cdf(t);
  }
  return 0.0;
}

double TravelTimeDist::ccdf(double t) const {
  switch (family_) {
    case Family::Normal: return normal_ccdf((t - a_) / b_);
    case Family::Lognormal: return t <= 0.0 ? 1.0 : normal_ccdf((std::log(t) - a_) / b_);
    case Family::Weibull: return t <= 0.0 ? 1.0 : std::exp(-std::pow(t / b_, a_));
    case Family::Empirical: return 1.0 - pmf_->cdf(t);
  }
  return 1.0;
}

double TravelTimeDist::pdf(double t) const {
  switch (family_) {
    case Family::Normal: return normal_pdf((t - a_) / b_) / b_;
    case Family::Lognormal:
      return t <= 0.0 ? 0.0 : normal_pdf((std::log(t) - a_) / b_) / (b_ * t);
    case Family::Weibull: {
      if (t <= 0.0) return 0.0;
      const double x = t / b_;
      return a_ / b_ * std::pow(x, a_ - 1.0) * std::exp(-std::pow(x, a_));
    }
    case Family::Empirical: return 0.0;
  }
  return 0.0;
}

double TravelTimeDist::quantile(double p) const {
  if (family_ == Family::Empirical) return pmf_->quantile(p);
  require_probability_open(p);
  double q = 0.0;
  switch (family_) {
    case Family::Normal: q = a_ + b_ * normal_quantile(p); break;
    case Family::Lognormal: q = std::exp(a_ + b_ * normal_quantile(p)); break;
    case Family::Weibull: q = b_ * std::pow(-std::log1p(-p), 1.0 / a_); break;
    case Family::Empirical: break;
  }
  // Round up to the first double whose CDF reaches p.
  for (int k = 0; k < 64 && cdf(q) < p; ++k) q = std::nextafter(q, HUGE_VAL);
  return q;
}

double eval_cdf(const TravelTimeDist& dist, double t) { return dist.cdf(t); }
double eval_cdf(const DiscretePMF& dist, double t) { return dist.cdf(t); }
double eval_quantile(const TravelTimeDist& dist, double p) { return dist.quantile(p); }
double eval_quantile(const DiscretePMF& dist, double p) { return dist.quantile(p); }

// ---------------------------------------------------------------------------
// Residual travel times

ResidualDist::ResidualDist(TravelTimeDist base, double elapsed)
    : base_(std::move(base)), elapsed_(elapsed), survival_(1.0) {
  if (!std::isfinite(elapsed_) || elapsed_ < 0.0) {
    throw DomainError("elapsed time must be finite and >= 0, got " + fmt(elapsed_));
  }
  // Nothing has been learned at b = 0: the residual is the leg itself.
  if (elapsed_ == 0.0) {
    mean_ = base_.mean();
    variance_ = base_.variance();
    if (base_.family() == Family::Normal) as_normal_ = NormalMoments{base_.mean(), base_.variance()};
    return;
  }
  survival_ = base_.ccdf(elapsed_);
  if (!(survival_ > 1e-12)) {
    throw MassExhausted("P(B > " + fmt(elapsed_) + ") = " + fmt(survival_) +
                        " leaves no residual mass");
  }

  switch (base_.family()) {
    case Family::Normal: {
      const double mu = base_.mean();
      const double sigma = base_.sd();
      const double z = (elapsed_ - mu) / sigma;
      const double lambda = inverse_mills_ratio(z);
      double factor = 1.0 + z * lambda - lambda * lambda;
      factor = std::max(factor, std::numeric_limits<double>::epsilon());
      as_normal_ = NormalMoments{mu + sigma * lambda, sigma * sigma * factor};
      mean_ = as_normal_->mean - elapsed_;
      variance_ = as_normal_->variance;
      break;
    }
    case Family::Empirical: {
      const DiscretePMF& pmf = *base_.pmf();
      double mass = 0.0;
      double m1 = 0.0;
      for (Eigen::Index k = 0; k < pmf.size(); ++k) {
        const double x = pmf.point(k) - elapsed_;
        if (x <= 1e-9 * pmf.step()) continue;
        mass += pmf.weights()(k);
        m1 += pmf.weights()(k) * x;
      }
      mean_ = m1 / mass;
      double m2 = 0.0;
      for (Eigen::Index k = 0; k < pmf.size(); ++k) {
        const double x = pmf.point(k) - elapsed_;
        if (x <= 1e-9 * pmf.step()) continue;
        m2 += pmf.weights()(k) * (x - mean_) * (x - mean_);
      }
      variance_ = m2 / mass;
      break;
    }
    default: {
      // E[R] = int_0^inf P(R > t) dt and E[R^2] = 2 int_0^inf t P(R > t) dt.
      boost::math::quadrature::exp_sinh<double> integrator;
      const double tol = 1e-13;
      const double m1 = integrator.integrate([this](double t) { return ccdf(t); }, tol);
      const double m2 = 2.0 * integrator.integrate([this](double t) { return t * ccdf(t); }, tol);
      mean_ = m1;
      variance_ = std::max(m2 - m1 * m1, 0.0);
      break;
    }
  }
}

double ResidualDist::ccdf(double t) const {
  if (t < 0.0) return 1.0;
  if (elapsed_ == 0.0) return base_.ccdf(t);
  return std::min(1.0, base_.ccdf(t + elapsed_) / survival_);
}

double ResidualDist::quantile(double p) const {
  if (elapsed_ == 0.0) return base_.quantile(p);
  if (base_.family() != Family::Empirical) require_probability_open(p);
  // P(B > x) = (1 - p) * S  <=>  x = F_B^{-1}(1 - (1 - p) S).
  const double q = 1.0 - (1.0 - p) * survival_;
  return std::max(0.0, base_.quantile(std::min(q, std::nextafter(1.0, 0.0))) - elapsed_);
}

ResidualDist condition_on_elapsed(const TravelTimeDist& dist, double elapsed) {
  return ResidualDist(dist, elapsed);
}

// ---------------------------------------------------------------------------
// Discretization and convolution

DiscretePMF discretize(const TravelTimeDist& dist, double step, double half_width_sigmas) {
  if (dist.family() == Family::Empirical && std::abs(dist.pmf()->step() - step) <= 1e-12) {
    return *dist.pmf();
  }
  const double mu = dist.mean();
  const Grid g = symmetric_grid(mu, dist.sd(), step, half_width_sigmas);
  const Eigen::Index n = g.last_j - g.first_j + 1;
  Eigen::VectorXd w(n);

  if (dist.family() == Family::Normal) {
    // Mass of bin j depends only on |j|, so compute it once per |j| and mirror:
    // the discretized normal stays exactly symmetric about the mean.
    const double sigma = dist.sd();
    auto bin_mass = [&](Eigen::Index aj) {
      if (aj == 0) {
        return std::erf(0.5 * step / sigma * 0.70710678118654752440);
      }
      const double lo = (static_cast<double>(aj) - 0.5) * step / sigma;
      const double hi = (static_cast<double>(aj) + 0.5) * step / sigma;
      return normal_ccdf(lo) - normal_ccdf(hi);
    };
    for (Eigen::Index j = g.first_j; j <= g.last_j; ++j) {
      w(j - g.first_j) = bin_mass(j < 0 ? -j : j);
    }
  } else {
    for (Eigen::Index j = g.first_j; j <= g.last_j; ++j) {
      const double x = mu + static_cast<double>(j) * step;
      const double lo = x - 0.5 * step;
      const double hi = x + 0.5 * step;
      w(j - g.first_j) = x <= mu ? dist.cdf(hi) - dist.cdf(lo) : dist.ccdf(lo) - dist.ccdf(hi);
    }
  }
  return DiscretePMF(mu + static_cast<double>(g.first_j) * step, step, std::move(w));
}

DiscretePMF discretize(const ResidualDist& dist, double step, double half_width_sigmas) {
  if (dist.elapsed() == 0.0) return discretize(dist.base(), step, half_width_sigmas);
  const double mu = dist.mean();
  const Grid g = symmetric_grid(mu, std::sqrt(dist.variance()), step, half_width_sigmas);
  const Eigen::Index n = g.last_j - g.first_j + 1;
  Eigen::VectorXd w(n);
  for (Eigen::Index j = g.first_j; j <= g.last_j; ++j) {
    const double x = mu + static_cast<double>(j) * step;
    w(j - g.first_j) = std::max(0.0, dist.ccdf(x - 0.5 * step) - dist.ccdf(x + 0.5 * step));
  }
  return DiscretePMF(mu + static_cast<double>(g.first_j) * step, step, std::move(w));
}

DiscretePMF convolve(const DiscretePMF& a, const DiscretePMF& b) {
  if (std::abs(a.step() - b.step()) > 1e-12) {
    throw StepMismatch("cannot convolve PMFs with steps " + fmt(a.step()) + " and " +
                       fmt(b.step()));
  }
  constexpr double kDirectLimit = 1 << 16;
  const double work = static_cast<double>(a.size()) * static_cast<double>(b.size());
  Eigen::VectorXd w = work <= kDirectLimit || std::min(a.size(), b.size()) <= 8
                          ? direct_convolve(a.weights(), b.weights())
                          : fft_convolve(a.weights(), b.weights());
  return DiscretePMF(a.origin() + b.origin(), a.step(), std::move(w));
}

DiscretePMF rebin(const DiscretePMF& pmf, Eigen::Index max_bins) {
  if (max_bins < 2) throw DomainError("rebin needs max_bins >= 2");
  if (pmf.size() <= max_bins) return pmf;
  const Eigen::Index span = pmf.size() - 1;
  const Eigen::Index factor = (span + max_bins - 2) / (max_bins - 1);
  const Eigen::Index n = span / factor + 1 + (span % factor != 0 ? 1 : 0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < pmf.size(); ++k) {
    const Eigen::Index i = k / factor;
    const double frac = static_cast<double>(k % factor) / static_cast<double>(factor);
    w(i) += pmf.weights()(k) * (1.0 - frac);
    if (frac > 0.0) w(i + 1) += pmf.weights()(k) * frac;
  }
  return DiscretePMF(pmf.origin(), pmf.step() * static_cast<double>(factor), std::move(w));
}

}  // namespace twopt
