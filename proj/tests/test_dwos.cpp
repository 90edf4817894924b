#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "twopt/dwos.hpp"
#include "twopt/errors.hpp"

using namespace twopt;

namespace {

std::vector<TravelTimeDist> stylized_legs(int n = 25) {
  return std::vector<TravelTimeDist>(static_cast<std::size_t>(n), TravelTimeDist::normal(10.0, 2.5));
}

DwosConfig stylized(double T = 30.0, std::uint64_t runs = 20) {
  DwosConfig c;
  c.threshold = T;
  c.omega = 0.5;
  c.penalty = Penalty::power(0.1, 1.1);
  c.runs = runs;
  c.seed = 2024;
  return c;
}

struct QuietEnv : ::testing::Environment {
  void SetUp() override { set_warning_handler([](const std::string&) {}); }
};
const auto* const kQuiet = ::testing::AddGlobalTestEnvironment(new QuietEnv);

}  // namespace

TEST(Locate, Examples) {
  Eigen::VectorXd b(3);
  b << 10, 10, 10;
  auto p = locate_position(b, 5.0, 3);
  EXPECT_EQ(p.client, 2);
  EXPECT_EQ(p.elapsed, 5.0);
  p = locate_position(b, 5.0, 0);
  EXPECT_EQ(p.client, 1);
  EXPECT_EQ(p.elapsed, 0.0);
  p = locate_position(b, 5.0, 2);
  EXPECT_EQ(p.client, 2);
  EXPECT_EQ(p.elapsed, 0.0);
  p = locate_position(b, 5.0, 5);
  EXPECT_EQ(p.client, 3);
  EXPECT_EQ(p.elapsed, 5.0);
  EXPECT_THROW(locate_position(b, 5.0, 6), RouteFinished);
  EXPECT_THROW(locate_position(b, 5.0, 7), RouteFinished);
}

TEST(Locate, Bounds) {
  Eigen::VectorXd b(4);
  b << 3.5, 0.25, 7.0, 2.0;
  for (int j = 0; j * 0.1 < b.sum(); ++j) {
    const auto p = locate_position(b, 0.1, j);
    ASSERT_GE(p.client, 1);
    ASSERT_LE(p.client, 4);
    EXPECT_GE(p.elapsed, 0.0);
    EXPECT_LT(p.elapsed, b(p.client - 1));
  }
}

TEST(Simulate, HugeThresholdMatchesStatic) {
  const auto legs = stylized_legs();
  const auto cfg = stylized(1e9, 5);
  const auto initial = static_schedule(legs, cfg);
  for (std::uint64_t run = 0; run < 5; ++run) {
    const auto r = simulate_run(legs, cfg, run);
    for (std::size_t i = 0; i < initial.size(); ++i) EXPECT_EQ(r.final.windows[i], initial.windows[i]);
    EXPECT_EQ(r.costs.total, r.static_costs.total);
    EXPECT_EQ(r.update_count(), 0);
    EXPECT_EQ(r.epochs, 0);
  }
}

TEST(Simulate, UpdatedWindowsNarrower) {
  const auto legs = stylized_legs();
  const auto cfg = stylized();
  int updated = 0;
  for (std::uint64_t run = 0; run < 10; ++run) {
    const auto r = simulate_run(legs, cfg, run);
    for (std::size_t i = 0; i < r.final.size(); ++i) {
      if (r.update_times[i] && *r.update_times[i] > 0.0) {
        ++updated;
        EXPECT_LT(r.final.windows[i].width, r.initial.windows[i].width) << "run " << run << " client " << i + 1;
      }
    }
  }
  EXPECT_GT(updated, 100);
}

TEST(Simulate, FlagInvariants) {
  const auto legs = stylized_legs();
  const auto cfg = stylized();
  for (std::uint64_t run = 0; run < 10; ++run) {
    const auto r = simulate_run(legs, cfg, run);
    ASSERT_EQ(r.update_times.size(), legs.size());
    EXPECT_LE(r.update_count(), static_cast<int>(legs.size()));
    EXPECT_EQ(r.late_communications, 0);
    double arrival = 0.0;
    for (std::size_t i = 0; i < legs.size(); ++i) {
      arrival += r.realized(static_cast<Eigen::Index>(i));
      if (!r.update_times[i]) {
        EXPECT_EQ(r.final.windows[i], r.initial.windows[i]);
        EXPECT_FALSE(r.advance_notice[i]);
        continue;
      }
      EXPECT_LE(*r.update_times[i], arrival);
      EXPECT_DOUBLE_EQ(*r.advance_notice[i], r.initial.windows[i].start - *r.update_times[i]);
      // relative start at the communication epoch is within the threshold
      EXPECT_LE(r.final.windows[i].start - *r.update_times[i], cfg.threshold + 1e-9);
    }
  }
}

TEST(Simulate, CostsAgainstFinalWindows) {
  const auto legs = stylized_legs(10);
  const auto cfg = stylized(20.0);
  const auto r = simulate_run(legs, cfg, 3);
  double s = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < legs.size(); ++i) {
    s += r.realized(static_cast<Eigen::Index>(i));
    const auto c = realized_client_cost(s, cfg.omega, cfg.penalty, r.final.windows[i]);
    EXPECT_EQ(c.late, r.costs.per_client[i].late);
    EXPECT_EQ(c.early, r.costs.per_client[i].early);
    EXPECT_EQ(c.width, r.costs.per_client[i].width);
    total += c.total();
  }
  EXPECT_NEAR(r.costs.total, total, 1e-12 * total);
}

TEST(Simulate, CommonRandomNumbers) {
  const auto legs = stylized_legs(10);
  const auto cfg = stylized();
  const auto r = simulate_run(legs, cfg, 7);
  EXPECT_EQ(r.realized, draw_realized(legs, cfg.seed, 7));
  for (std::size_t i = 0; i < legs.size(); ++i) {
    EXPECT_EQ(r.realized(static_cast<Eigen::Index>(i)), sample_leg(legs[i], cfg.seed, 7, static_cast<std::uint32_t>(i)));
  }
}

TEST(Simulate, DeterministicAndThreadInvariant) {
  const auto legs = stylized_legs(12);
  auto cfg = stylized(30.0, 12);
  const auto a = simulate_runs(legs, cfg, 1);
  const auto b = simulate_runs(legs, cfg, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(to_json_line(a[k], k), to_json_line(b[k], k));
  }
  EXPECT_EQ(to_json_line(simulate_run(legs, cfg, 4), 4), to_json_line(a[4], 4));
}

TEST(Simulate, ResidualVarianceShrinks) {
  const auto legs = stylized_legs(8);
  const auto full = build_arrivals(legs, ArrivalEngine::exact_normal());
  const Eigen::VectorXd b = draw_realized(legs, 99, 0);
  for (int j = 0; j * 1.0 < b.sum(); ++j) {
    const auto pos = locate_position(b, 1.0, j);
    std::vector<RouteLeg> sub;
    sub.emplace_back(condition_on_elapsed(legs[static_cast<std::size_t>(pos.client - 1)], pos.elapsed));
    for (std::size_t i = static_cast<std::size_t>(pos.client); i < legs.size(); ++i) sub.emplace_back(legs[i]);
    const auto arr = build_arrivals(sub, ArrivalEngine::exact_normal());
    for (std::size_t k = 0; k < arr.size(); ++k) {
      EXPECT_LE(arr[k].variance(), full[static_cast<std::size_t>(pos.client - 1) + k].variance() + 1e-12);
    }
  }
}

TEST(Simulate, GridEngineRuns) {
  std::vector<TravelTimeDist> legs(6, TravelTimeDist::weibull(10.0, 2.5));
  auto cfg = stylized(25.0, 2);
  cfg.engine = ArrivalEngine::hybrid(3, 1e-2);
  const auto r = simulate_run(legs, cfg, 0);
  EXPECT_EQ(r.final.size(), 6u);
  EXPECT_GT(r.epochs, 0);
}

TEST(RelativeDifference, Formula) {
  EXPECT_DOUBLE_EQ(relative_difference(100.0, 90.0), 10.0);
  EXPECT_EQ(relative_difference(7.5, 7.5), 0.0);
  EXPECT_DOUBLE_EQ(relative_difference(50.0, 60.0), -20.0);
  EXPECT_THROW(relative_difference(0.0, 1.0), DomainError);
  EXPECT_THROW(relative_difference(-2.0, 1.0), DomainError);
}

TEST(Notice, SingleRecord) {
  DwosRunRecord r;
  r.update_times = {std::nullopt, 6.0};
  r.advance_notice = {std::nullopt, 24.0};
  const std::vector<DwosRunRecord> recs{r};
  const std::vector<int> clients{2};
  const std::vector<double> th{10, 15, 25};
  const auto rows = advance_notice_stats(recs, clients, th);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].updates, 1);
  ASSERT_EQ(rows[0].below_pct.size(), 3u);
  EXPECT_EQ(rows[0].below_pct[0], 0.0);
  EXPECT_EQ(rows[0].below_pct[1], 0.0);
  EXPECT_EQ(rows[0].below_pct[2], 100.0);
  EXPECT_EQ(rows[0].mean, 24.0);
}

TEST(Notice, NoUpdatesIsEmpty) {
  const auto legs = stylized_legs(6);
  auto cfg = stylized(1e9, 3);
  const auto recs = simulate_runs(legs, cfg);
  const std::vector<int> clients{6};
  const std::vector<double> th{10};
  const auto rows = advance_notice_stats(recs, clients, th);
  ASSERT_EQ(rows.size(), 1u);
  // every client is communicated at time 0 only, which is not an update
  EXPECT_EQ(rows[0].updates, 0);
  EXPECT_TRUE(rows[0].below_pct.empty());
  EXPECT_FALSE(rows[0].mean.has_value());
}

TEST(DwosSettings, Validation) {
  DwosConfig c;
  EXPECT_NO_THROW(c.validate());
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c.tau = 1.0;
  c.threshold = -1.0;
  EXPECT_THROW(c.validate(), DomainError);
}
