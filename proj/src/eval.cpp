#include "twopt/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <string>
#include <thread>

#include "twopt/errors.hpp"
#include "twopt/normal.hpp"
#include "twopt/rng.hpp"
#include "twopt/table.hpp"

namespace twopt {

namespace {

constexpr std::uint64_t kChunk = 4096;

struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    const double tot = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / tot;
    m2 += o.m2 + d * d * n * o.n / tot;
    n = tot;
  }
};

struct ChunkResult {
  // [schedule][client] sums of late and early costs
  std::vector<std::vector<ClientCost>> sums;
  std::vector<Moments> totals;
};

CostBreakdown finish(std::vector<ClientCost> per_client, double std_error) {
  CostBreakdown c;
  c.per_client = std::move(per_client);
  for (const auto& k : c.per_client) c.total += k.total();
  c.std_error = std_error;
  return c;
}

void check_omega(double omega) {
  if (!(omega > 0.0 && omega < 1.0)) throw DomainError("omega must lie in (0,1)");
}

}  // namespace

ClientCost expected_client_cost(const ArrivalDist& F, double omega, const Penalty& penalty,
                                const Window& w) {
  ClientCost c;
  c.width = penalty.value(w.width);
  if (F.is_normal()) {
    c.late = omega * normal_expected_excess(F.mean(), F.sd(), w.end());
    c.early = (1.0 - omega) * normal_expected_shortfall(F.mean(), F.sd(), w.start);
    return c;
  }
  const DiscretePMF& p = *F.pmf();
  const double h = p.step();
  const double a = w.end();
  const double b = w.start;
  double late = 0.0;
  double early = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double m = p.weights()(k);
    if (m == 0.0) continue;
    const double mid = p.point(k);
    const double lo = mid - 0.5 * h;
    const double hi = mid + 0.5 * h;
    if (a <= lo) late += m * (mid - a);
    else if (a < hi) late += m * (hi - a) * (hi - a) / (2.0 * h);
    if (b >= hi) early += m * (b - mid);
    else if (b > lo) early += m * (b - lo) * (b - lo) / (2.0 * h);
  }
  c.late = omega * late;
  c.early = (1.0 - omega) * early;
  return c;
}

ClientCost realized_client_cost(double arrival, double omega, const Penalty& penalty,
                                const Window& w) {
  return {omega * std::max(0.0, arrival - w.end()), (1.0 - omega) * std::max(0.0, w.start - arrival),
          penalty.value(w.width)};
}

double sample_leg(const TravelTimeDist& leg, std::uint64_t seed, std::uint64_t run,
                  std::uint32_t client) {
  return leg.quantile(uniform01(seed, run, client, 0));
}

std::vector<CostBreakdown> mc_objective(std::span<const Schedule> schedules,
                                        std::span<const TravelTimeDist> legs, double omega,
                                        const Penalty& penalty, std::uint64_t runs,
                                        std::uint64_t seed, unsigned threads) {
  check_omega(omega);
  if (runs < 1) throw DomainError("Monte Carlo needs at least one run");
  const std::size_t n = legs.size();
  for (const auto& s : schedules) {
    if (s.size() != n) {
      throw LengthMismatch("schedule has " + std::to_string(s.size()) + " windows for " +
                           std::to_string(n) + " legs");
    }
  }
  const std::size_t ns = schedules.size();
  const std::uint64_t nchunks = (runs + kChunk - 1) / kChunk;
  std::vector<ChunkResult> chunks(nchunks);

  const auto work = [&](std::uint64_t ci) {
    ChunkResult& r = chunks[ci];
    r.sums.assign(ns, std::vector<ClientCost>(n));
    r.totals.assign(ns, Moments{});
    std::vector<double> arrival(n);
    const std::uint64_t end = std::min(runs, (ci + 1) * kChunk);
    for (std::uint64_t run = ci * kChunk; run < end; ++run) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += sample_leg(legs[i], seed, run, static_cast<std::uint32_t>(i));
        arrival[i] = s;
      }
      for (std::size_t k = 0; k < ns; ++k) {
        double tot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const Window& w = schedules[k].windows[i];
          const double late = omega * std::max(0.0, arrival[i] - w.end());
          const double early = (1.0 - omega) * std::max(0.0, w.start - arrival[i]);
          r.sums[k][i].late += late;
          r.sums[k][i].early += early;
          tot += late + early;
        }
        r.totals[k].add(tot);
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto nworkers = static_cast<unsigned>(std::min<std::uint64_t>(threads, nchunks));
  if (nworkers <= 1) {
    for (std::uint64_t ci = 0; ci < nchunks; ++ci) work(ci);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nworkers; ++t) {
      pool.emplace_back([&] {
        for (std::uint64_t ci = next++; ci < nchunks; ci = next++) work(ci);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<CostBreakdown> out;
  const double R = static_cast<double>(runs);
  for (std::size_t k = 0; k < ns; ++k) {
    std::vector<ClientCost> per(n);
    Moments m;
    for (const auto& r : chunks) {
      for (std::size_t i = 0; i < n; ++i) {
        per[i].late += r.sums[k][i].late;
        per[i].early += r.sums[k][i].early;
      }
      m.merge(r.totals[k]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      per[i].late /= R;
      per[i].early /= R;
      per[i].width = penalty.value(schedules[k].windows[i].width);
    }
    const double se = runs > 1 ? std::sqrt(m.m2 / (R - 1.0) / R) : 0.0;
    out.push_back(finish(std::move(per), se));
  }
  return out;
}

CostBreakdown mc_objective(const Schedule& schedule, std::span<const TravelTimeDist> legs,
                           double omega, const Penalty& penalty, std::uint64_t runs,
                           std::uint64_t seed, unsigned threads) {
  return mc_objective(std::span<const Schedule>(&schedule, 1), legs, omega, penalty, runs, seed,
                      threads)
      .front();
}

CostBreakdown analytic_objective_normal(const Schedule& schedule,
                                        std::span<const ArrivalDist> arrivals, double omega,
                                        const Penalty& penalty) {
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    if (!arrivals[i].is_normal()) {
      throw EngineMismatch("analytic evaluation needs normal arrivals; client " +
                           std::to_string(i + 1) + " is a grid distribution");
    }
  }
  return expected_objective(schedule, arrivals, omega, penalty);
}

CostBreakdown expected_objective(const Schedule& schedule, std::span<const ArrivalDist> arrivals,
                                 double omega, const Penalty& penalty) {
  check_omega(omega);
  if (schedule.size() != arrivals.size()) {
    throw LengthMismatch("schedule has " + std::to_string(schedule.size()) + " windows for " +
                         std::to_string(arrivals.size()) + " arrivals");
  }
  std::vector<ClientCost> per;
  per.reserve(arrivals.size());
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    per.push_back(expected_client_cost(arrivals[i], omega, penalty, schedule.windows[i]));
  }
  return finish(std::move(per), 0.0);
}

double spread(const CostBreakdown& c) {
  if (c.per_client.empty()) return 0.0;
  double lo = c.per_client.front().total();
  double hi = lo;
  for (const auto& k : c.per_client) {
    lo = std::min(lo, k.total());
    hi = std::max(hi, k.total());
  }
  return hi - lo;
}

CostComparison per_client_compare(const CostBreakdown& a, const CostBreakdown& b) {
  if (a.per_client.size() != b.per_client.size()) {
    throw LengthMismatch("cannot compare breakdowns of " + std::to_string(a.per_client.size()) +
                         " and " + std::to_string(b.per_client.size()) + " clients");
  }
  CostComparison c;
  for (std::size_t i = 0; i < a.per_client.size(); ++i) {
    const ClientCost& x = a.per_client[i];
    const ClientCost& y = b.per_client[i];
    c.deltas.push_back({x.late - y.late, x.early - y.early, x.width - y.width});
    c.total_deltas.push_back(x.total() - y.total());
  }
  c.spread_a = spread(a);
  c.spread_b = spread(b);
  return c;
}

void write_breakdown_csv(std::ostream& os, const CostBreakdown& c) {
  os << "client,late,early,width,total\n";
  for (std::size_t i = 0; i < c.per_client.size(); ++i) {
    const ClientCost& k = c.per_client[i];
    os << i + 1 << ',' << format_double(k.late) << ',' << format_double(k.early) << ','
       << format_double(k.width) << ',' << format_double(k.total()) << '\n';
  }
}

}  // namespace twopt
