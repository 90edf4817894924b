#include "twopt/arrival.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "twopt/errors.hpp"
#include "twopt/normal.hpp"

namespace twopt {

ArrivalDist ArrivalDist::normal(double mean, double sd) {
  if (!std::isfinite(mean) || !(sd > 0.0) || !std::isfinite(sd)) {
    throw DomainError("normal arrival needs finite mean and sd > 0");
  }
  return ArrivalDist(Kind::ParamNormal, mean, sd);
}

ArrivalDist ArrivalDist::grid(DiscretePMF pmf) {
  ArrivalDist d(Kind::Grid, pmf.mean(), std::sqrt(pmf.variance()));
  d.pmf_ = std::move(pmf);
  return d;
}

double ArrivalDist::cdf(double t) const {
  if (kind_ == Kind::ParamNormal) return normal_cdf((t - mean_) / sd_);
  const DiscretePMF& p = *pmf_;
  const double u = (t - p.origin()) / p.step() + 0.5;
  if (u <= 0.0) return 0.0;
  if (u >= static_cast<double>(p.size())) return 1.0;
  const auto k = static_cast<Eigen::Index>(std::floor(u));
  const double below = k > 0 ? p.cumulative()(k - 1) : 0.0;
  return std::min(1.0, below + (u - static_cast<double>(k)) * p.weights()(k));
}

double ArrivalDist::pdf(double t) const {
  if (kind_ == Kind::ParamNormal) return normal_pdf((t - mean_) / sd_) / sd_;
  const DiscretePMF& p = *pmf_;
  const double u = (t - p.origin()) / p.step() + 0.5;
  if (u < 0.0 || u >= static_cast<double>(p.size())) return 0.0;
  return p.weights()(static_cast<Eigen::Index>(std::floor(u))) / p.step();
}

double ArrivalDist::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("arrival quantile requires p in (0,1), got " + std::to_string(p));
  }
  if (kind_ == Kind::ParamNormal) return mean_ + sd_ * normal_quantile(p);
  const DiscretePMF& g = *pmf_;
  const double* begin = g.cumulative().data();
  const double* end = begin + g.cumulative().size();
  const auto k = std::min<Eigen::Index>(std::lower_bound(begin, end, p) - begin, g.size() - 1);
  const double below = k > 0 ? g.cumulative()(k - 1) : 0.0;
  const double w = g.weights()(k);
  const double frac = w > 0.0 ? std::clamp((p - below) / w, 0.0, 1.0) : 0.0;
  return g.origin() + (static_cast<double>(k) - 0.5 + frac) * g.step();
}

ArrivalDist ArrivalDist::shifted(double offset) const {
  if (kind_ == Kind::ParamNormal) return normal(mean_ + offset, sd_);
  const DiscretePMF& g = *pmf_;
  return grid(DiscretePMF(g.origin() + offset, g.step(), g.weights()));
}

// ---------------------------------------------------------------------------

void ArrivalEngine::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("engine step must be > 0");
  if (!(half_width_sigmas > 0.0)) throw DomainError("engine half-width k must be > 0");
  if (i0 < 1) throw DomainError("engine i0 must be >= 1");
  if (max_bins != 0 && max_bins < 2) throw DomainError("engine max_bins must be 0 or >= 2");
}

const char* to_string(ArrivalEngine::Mode mode) {
  switch (mode) {
    case ArrivalEngine::Mode::ExactNormal: return "exact_normal";
    case ArrivalEngine::Mode::Convolution: return "convolution";
    case ArrivalEngine::Mode::Hybrid: return "hybrid";
  }
  return "unknown";
}

ArrivalEngine::Mode engine_mode_from_string(const std::string& name) {
  if (name == "exact_normal") return ArrivalEngine::Mode::ExactNormal;
  if (name == "convolution") return ArrivalEngine::Mode::Convolution;
  if (name == "hybrid") return ArrivalEngine::Mode::Hybrid;
  throw DomainError("unknown arrival engine '" + name + "'");
}

namespace {

double leg_mean(const RouteLeg& leg) {
  return std::visit([](const auto& d) { return d.mean(); }, leg);
}

double leg_variance(const RouteLeg& leg) {
  return std::visit([](const auto& d) { return d.variance(); }, leg);
}

// Normal parameters of the remaining leg duration, when the leg is normal.
std::optional<std::pair<double, double>> leg_normal(const RouteLeg& leg) {
  if (const auto* d = std::get_if<TravelTimeDist>(&leg)) {
    if (d->family() == Family::Normal) return std::pair{d->mean(), d->sd()};
    return std::nullopt;
  }
  const auto& r = std::get<ResidualDist>(leg);
  if (!r.as_normal()) return std::nullopt;
  return std::pair{r.as_normal()->mean - r.elapsed(), std::sqrt(r.as_normal()->variance)};
}

DiscretePMF leg_pmf(const RouteLeg& leg, double step, double k) {
  return std::visit([&](const auto& d) { return discretize(d, step, k); }, leg);
}

}  // namespace

std::vector<ArrivalDist> build_arrivals(std::span<const TravelTimeDist> legs,
                                        const ArrivalEngine& engine) {
  std::vector<RouteLeg> wrapped(legs.begin(), legs.end());
  auto out = build_arrivals(std::span<const RouteLeg>(wrapped), engine);
  if (out.front().cdf(0.0) > 1e-6) {
    warn("arrival distribution of client 1 puts " + std::to_string(out.front().cdf(0.0)) +
         " mass at or below time 0");
  }
  return out;
}

std::vector<ArrivalDist> build_arrivals(std::span<const RouteLeg> legs,
                                        const ArrivalEngine& engine) {
  if (legs.empty()) throw DomainError("route has no legs");
  engine.validate();
  const auto n = static_cast<int>(legs.size());
  std::vector<ArrivalDist> out;
  out.reserve(legs.size());

  if (engine.mode == ArrivalEngine::Mode::ExactNormal) {
    double mean = 0.0;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto p = leg_normal(legs[i]);
      if (!p) {
        throw EngineMismatch("exact-normal engine needs normal legs; leg " + std::to_string(i + 1) +
                             " is not normal");
      }
      mean += p->first;
      var += p->second * p->second;
      out.push_back(ArrivalDist::normal(mean, std::sqrt(var)));
    }
  } else {
    // Clients 1..conv_count are convolved; the rest (Hybrid) get normal proxies
    // anchored on the last convolved PMF's true moments.
    const int conv_count =
        engine.mode == ArrivalEngine::Mode::Convolution ? n : std::min(n, engine.i0 - 1);
    std::optional<DiscretePMF> acc;
    double step = engine.step;
    for (int i = 0; i < conv_count; ++i) {
      DiscretePMF leg = leg_pmf(legs[i], step, engine.half_width_sigmas);
      acc = acc ? convolve(*acc, leg) : std::move(leg);
      if (engine.max_bins > 0 && acc->size() > engine.max_bins) {
        acc = rebin(*acc, engine.max_bins);
        step = acc->step();
      }
      out.push_back(ArrivalDist::grid(*acc));
    }
    double mean = acc ? acc->mean() : 0.0;
    double var = acc ? acc->variance() : 0.0;
    for (int i = conv_count; i < n; ++i) {
      mean += leg_mean(legs[i]);
      var += leg_variance(legs[i]);
      out.push_back(ArrivalDist::normal(mean, std::sqrt(var)));
    }
  }
  return out;
}

}  // namespace twopt
