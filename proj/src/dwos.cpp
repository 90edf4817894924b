#include "twopt/dwos.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include <json.hpp>

#include "twopt/errors.hpp"

namespace twopt {

void DwosConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be > 0");
  if (!(threshold >= 0.0)) throw DomainError("threshold T must be >= 0");
  if (!(omega > 0.0 && omega < 1.0)) throw DomainError("omega must lie in (0,1)");
  if (runs < 1) throw DomainError("runs must be >= 1");
  engine.validate();
}

int DwosRunRecord::update_count() const {
  return static_cast<int>(std::count_if(update_times.begin(), update_times.end(),
                                        [](const auto& u) { return u.has_value(); }));
}

Position locate_position(const Eigen::VectorXd& realized, double tau, int j) {
  if (j < 0) throw DomainError("epoch index must be >= 0");
  const double now = tau * j;
  double done = 0.0;
  for (Eigen::Index i = 0; i < realized.size(); ++i) {
    if (done + realized(i) > now) return {static_cast<int>(i) + 1, now - done};
    done += realized(i);
  }
  throw RouteFinished("route finished at " + std::to_string(done) + " before time " +
                      std::to_string(now));
}

Schedule static_schedule(std::span<const TravelTimeDist> legs, const DwosConfig& config) {
  const auto arrivals = build_arrivals(legs, config.engine);
  return solve_schedule(arrivals, config.omega, config.penalty);
}

Eigen::VectorXd draw_realized(std::span<const TravelTimeDist> legs, std::uint64_t seed,
                              std::uint64_t run) {
  Eigen::VectorXd b(static_cast<Eigen::Index>(legs.size()));
  for (std::size_t i = 0; i < legs.size(); ++i) {
    b(static_cast<Eigen::Index>(i)) = sample_leg(legs[i], seed, run, static_cast<std::uint32_t>(i));
  }
  return b;
}

namespace {

CostBreakdown realized_costs(const Schedule& s, const Eigen::VectorXd& arrival, double omega,
                             const Penalty& penalty) {
  CostBreakdown c;
  for (std::size_t i = 0; i < s.size(); ++i) {
    c.per_client.push_back(
        realized_client_cost(arrival(static_cast<Eigen::Index>(i)), omega, penalty, s.windows[i]));
    c.total += c.per_client.back().total();
  }
  return c;
}

}  // namespace

DwosRunRecord simulate_run(std::span<const TravelTimeDist> legs, const DwosConfig& config,
                           const Schedule& initial, const Eigen::VectorXd& realized) {
  config.validate();
  const auto n = static_cast<int>(legs.size());
  if (initial.size() != legs.size() || realized.size() != n) {
    throw LengthMismatch("legs, initial schedule and realized times must have equal length");
  }
  DwosRunRecord rec;
  rec.realized = realized;
  rec.initial = initial;
  rec.final = initial;
  rec.update_times.assign(legs.size(), std::nullopt);
  rec.advance_notice.assign(legs.size(), std::nullopt);

  Eigen::VectorXd arrival(n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) arrival(i) = (s += realized(i));
  const double total = s;

  // j = 0: every client receives its static window; those within T are final.
  std::vector<bool> flagged(legs.size());
  for (int i = 0; i < n; ++i) flagged[i] = initial.windows[i].start <= config.threshold;

  std::vector<RouteLeg> sub;
  for (int j = 1;; ++j) {
    const double now = config.tau * j;
    if (now >= total) break;
    const Position pos = locate_position(realized, config.tau, j);
    const int first = pos.client - 1;
    bool pending = false;
    for (int i = first; i < n && !pending; ++i) pending = !flagged[i];
    if (!pending) break;
    ++rec.epochs;

    try {
      sub.clear();
      sub.emplace_back(condition_on_elapsed(legs[first], pos.elapsed));
      for (int i = first + 1; i < n; ++i) sub.emplace_back(legs[i]);
      const auto arrivals = build_arrivals(std::span<const RouteLeg>(sub), config.engine);
      for (int i = first; i < n; ++i) {
        if (flagged[i]) continue;
        const Window w = solve_client(arrivals[i - first], config.omega, config.penalty).window;
        if (w.start > config.threshold) continue;
        rec.final.windows[i] = {now + w.start, w.width};
        flagged[i] = true;
        rec.update_times[i] = now;
        rec.advance_notice[i] = initial.windows[i].start - now;
        if (now > arrival(i)) ++rec.late_communications;
      }
    } catch (const Error& e) {
      rethrow_with_context(e, "epoch " + std::to_string(j) + " (time " + std::to_string(now) + ")");
    }
  }
  rec.final.feasible = starts_nondecreasing(rec.final.windows);
  rec.costs = realized_costs(rec.final, arrival, config.omega, config.penalty);
  rec.static_costs = realized_costs(rec.initial, arrival, config.omega, config.penalty);
  return rec;
}

DwosRunRecord simulate_run(std::span<const TravelTimeDist> legs, const DwosConfig& config,
                           std::uint64_t run) {
  return simulate_run(legs, config, static_schedule(legs, config),
                      draw_realized(legs, config.seed, run));
}

std::vector<DwosRunRecord> simulate_runs(std::span<const TravelTimeDist> legs,
                                         const DwosConfig& config, unsigned threads) {
  config.validate();
  const Schedule initial = static_schedule(legs, config);
  std::vector<DwosRunRecord> out(config.runs);
  const auto work = [&](std::uint64_t r) {
    out[r] = simulate_run(legs, config, initial, draw_realized(legs, config.seed, r));
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto nworkers = static_cast<unsigned>(std::min<std::uint64_t>(threads, config.runs));
  if (nworkers <= 1) {
    for (std::uint64_t r = 0; r < config.runs; ++r) work(r);
    return out;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < nworkers; ++t) {
    pool.emplace_back([&] {
      for (std::uint64_t r = next++; r < config.runs && !failed; r = next++) {
        try {
          work(r);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

double relative_difference(double static_cost, double dwos_cost) {
  if (!(static_cost > 0.0)) {
    throw DomainError("relative difference needs a positive static cost, got " +
                      std::to_string(static_cost));
  }
  return (static_cost - dwos_cost) / static_cost * 100.0;
}

std::vector<NoticeRow> advance_notice_stats(std::span<const DwosRunRecord> records,
                                            std::span<const int> clients,
                                            std::span<const double> thresholds) {
  if (records.empty()) throw DomainError("advance-notice statistics need at least one record");
  std::vector<NoticeRow> rows;
  for (int c : clients) {
    NoticeRow row;
    row.client = c;
    std::vector<int> below(thresholds.size(), 0);
    double sum = 0.0;
    for (const auto& r : records) {
      if (c < 1 || static_cast<std::size_t>(c) > r.advance_notice.size()) {
        throw DomainError("client index " + std::to_string(c) + " out of range");
      }
      const auto& a = r.advance_notice[static_cast<std::size_t>(c - 1)];
      if (!a) continue;
      ++row.updates;
      sum += *a;
      for (std::size_t k = 0; k < thresholds.size(); ++k) below[k] += *a < thresholds[k];
    }
    if (row.updates > 0) {
      for (int b : below) row.below_pct.push_back(100.0 * b / row.updates);
      row.mean = sum / row.updates;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string to_json_line(const DwosRunRecord& r, std::uint64_t run) {
  using nlohmann::json;
  const auto windows = [](const Schedule& s) {
    json a = json::array();
    for (const auto& w : s.windows) a.push_back({w.start, w.width});
    return a;
  };
  const auto optionals = [](const std::vector<std::optional<double>>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(x ? json(*x) : json(nullptr));
    return a;
  };
  json j;
  j["run"] = run;
  j["realized"] = std::vector<double>(r.realized.data(), r.realized.data() + r.realized.size());
  j["initial"] = windows(r.initial);
  j["final"] = windows(r.final);
  j["update_times"] = optionals(r.update_times);
  j["advance_notice"] = optionals(r.advance_notice);
  json costs = json::array();
  for (const auto& c : r.costs.per_client) costs.push_back({c.late, c.early, c.width});
  j["costs"] = costs;
  j["dwos_cost"] = r.costs.total;
  j["static_cost"] = r.static_costs.total;
  j["late_communications"] = r.late_communications;
  return j.dump();
}

}  // namespace twopt
