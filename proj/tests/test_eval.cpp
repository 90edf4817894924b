#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "twopt/errors.hpp"
#include "twopt/eval.hpp"
#include "twopt/normal.hpp"

using namespace twopt;

namespace {

TravelTimeDist point_mass(double x) {
  return TravelTimeDist::empirical(DiscretePMF(x, 0.5, Eigen::VectorXd::Ones(1)));
}

std::vector<TravelTimeDist> normal_legs(int n) {
  return std::vector<TravelTimeDist>(static_cast<std::size_t>(n), TravelTimeDist::normal(10.0, 2.5));
}

std::vector<ArrivalDist> arrivals_of(const std::vector<TravelTimeDist>& legs) {
  set_warning_handler([](const std::string&) {});
  auto a = build_arrivals(legs, ArrivalEngine::exact_normal());
  set_warning_handler({});
  return a;
}

}  // namespace

TEST(McObjective, DegenerateInsideWindows) {
  const std::vector<TravelTimeDist> legs{point_mass(5), point_mass(7), point_mass(3)};
  const auto p = Penalty::power(0.2, 1.5);
  Schedule s;
  s.windows = {{4.0, 2.0}, {11.0, 1.5}, {14.5, 1.0}};
  const auto c = mc_objective(s, legs, 0.5, p, 100, 3);
  EXPECT_EQ(c.total, p.value(2.0) + p.value(1.5) + p.value(1.0));
  EXPECT_EQ(c.std_error, 0.0);
}

TEST(McObjective, DegenerateEarlyWindows) {
  const std::vector<TravelTimeDist> legs{point_mass(5), point_mass(7), point_mass(3)};
  const auto p = Penalty::linear(0.1);
  const double g = 0.5;
  const double omega = 0.5;
  Schedule s;
  s.windows = {{5.0 + g, 2.0}, {12.0 + g, 1.0}, {15.0 + g, 4.0}};
  const auto c = mc_objective(s, legs, omega, p, 64, 9);
  double expect = 0.0;
  for (const auto& w : s.windows) expect += (1.0 - omega) * g + p.value(w.width);
  EXPECT_EQ(c.total, expect);
  for (const auto& pc : c.per_client) {
    EXPECT_EQ(pc.late, 0.0);
    EXPECT_EQ(pc.early, (1.0 - omega) * g);
  }
}

TEST(McObjective, AgreesWithAnalytic) {
  const auto legs = normal_legs(10);
  const auto arr = arrivals_of(legs);
  for (const auto& p : {Penalty::linear(0.1), Penalty::power(0.1, 1.5)}) {
    const auto s = solve_schedule(arr, 0.5, p);
    const auto exact = analytic_objective_normal(s, arr, 0.5, p);
    const auto mc = mc_objective(s, legs, 0.5, p, 1000000, 11);
    EXPECT_EQ(exact.std_error, 0.0);
    EXPECT_GT(mc.std_error, 0.0);
    EXPECT_LE(std::abs(mc.total - exact.total), 3.0 * mc.std_error);
  }
}

TEST(McObjective, StandardErrorScaling) {
  const auto legs = normal_legs(10);
  const auto arr = arrivals_of(legs);
  const auto p = Penalty::power(0.1, 1.5);
  const auto s = solve_schedule(arr, 0.5, p);
  const double se1 = mc_objective(s, legs, 0.5, p, 20000, 5).std_error;
  const double se4 = mc_objective(s, legs, 0.5, p, 80000, 5).std_error;
  EXPECT_NEAR(se4 / se1, 0.5, 0.1);
}

TEST(McObjective, DeterministicAndThreadInvariant) {
  const auto legs = normal_legs(8);
  const auto arr = arrivals_of(legs);
  const auto p = Penalty::linear(0.1);
  const auto s = solve_schedule(arr, 0.3, p);
  const auto a = mc_objective(s, legs, 0.3, p, 10000, 77, 1);
  const auto b = mc_objective(s, legs, 0.3, p, 10000, 77, 1);
  const auto c = mc_objective(s, legs, 0.3, p, 10000, 77, 4);
  EXPECT_EQ(a.total, b.total);
  EXPECT_EQ(a.total, c.total);
  EXPECT_EQ(a.std_error, c.std_error);
  for (std::size_t i = 0; i < a.per_client.size(); ++i) {
    EXPECT_EQ(a.per_client[i].late, c.per_client[i].late);
    EXPECT_EQ(a.per_client[i].early, c.per_client[i].early);
  }
  const auto d = mc_objective(s, legs, 0.3, p, 10000, 78, 1);
  EXPECT_NE(a.total, d.total);
}

TEST(McObjective, ComponentsNonnegativeAndSum) {
  const auto legs = normal_legs(6);
  const auto arr = arrivals_of(legs);
  const auto p = Penalty::power(0.25, 1.1);
  const auto s = solve_schedule(arr, 0.7, p);
  const auto c = mc_objective(s, legs, 0.7, p, 5000, 1);
  double sum = 0.0;
  for (const auto& pc : c.per_client) {
    EXPECT_GE(pc.late, 0.0);
    EXPECT_GE(pc.early, 0.0);
    EXPECT_GE(pc.width, 0.0);
    sum += pc.total();
  }
  EXPECT_NEAR(c.total, sum, 1e-9 * sum);
  for (double x : {-3.0, 0.0, 9.0, 10.5, 40.0}) {
    const auto r = realized_client_cost(x, 0.7, p, {8.0, 2.0});
    EXPECT_GE(r.late, 0.0);
    EXPECT_GE(r.early, 0.0);
  }
}

TEST(McObjective, SharedSamplePaths) {
  const auto legs = normal_legs(5);
  const auto arr = arrivals_of(legs);
  const auto p = Penalty::linear(0.1);
  const std::vector<Schedule> both{solve_schedule(arr, 0.5, p), solve_schedule(arr, 0.3, p)};
  const auto multi = mc_objective(both, legs, 0.5, p, 3000, 21);
  EXPECT_EQ(multi[0].total, mc_objective(both[0], legs, 0.5, p, 3000, 21).total);
  EXPECT_EQ(multi[1].total, mc_objective(both[1], legs, 0.5, p, 3000, 21).total);
}

TEST(McObjective, LengthMismatch) {
  Schedule s;
  s.windows = {{1.0, 1.0}};
  EXPECT_THROW(mc_objective(s, normal_legs(2), 0.5, Penalty::linear(0.1), 10, 1), LengthMismatch);
}

TEST(Analytic, NormalPrimitives) {
  const double sigma = 2.5;
  EXPECT_NEAR(normal_expected_excess(10.0, sigma, 10.0), sigma * 0.39894228040143267794, 1e-15);
  EXPECT_LE(normal_expected_excess(10.0, sigma, 10.0 + 10.0 * sigma), 1e-12);
  EXPECT_NEAR(normal_expected_shortfall(10.0, sigma, 10.0), normal_expected_excess(10.0, sigma, 10.0), 1e-15);
  for (double c : {4.0, 8.0, 12.0, 17.0}) {
    // E(X-c)^+ - E(c-X)^+ = mu - c
    EXPECT_NEAR(normal_expected_excess(10.0, sigma, c) - normal_expected_shortfall(10.0, sigma, c), 10.0 - c, 1e-12);
  }
}

TEST(Analytic, RejectsGridArrivals) {
  const auto legs = normal_legs(3);
  const auto arr = build_arrivals(legs, ArrivalEngine::convolution(1e-2));
  const auto s = solve_schedule(arr, 0.5, Penalty::linear(0.1));
  EXPECT_THROW(analytic_objective_normal(s, arr, 0.5, Penalty::linear(0.1)), EngineMismatch);
  EXPECT_NO_THROW(expected_objective(s, arr, 0.5, Penalty::linear(0.1)));
}

TEST(Analytic, GridMatchesNormalClosely) {
  const auto legs = normal_legs(4);
  const auto g = build_arrivals(legs, ArrivalEngine::convolution(1e-3));
  const auto n = arrivals_of(legs);
  const auto p = Penalty::power(0.1, 1.5);
  const auto s = solve_schedule(n, 0.5, p);
  const double exact = analytic_objective_normal(s, n, 0.5, p).total;
  // 4-sigma grid truncation and the clip at 0 drop about 1e-4 of the mass
  EXPECT_NEAR(expected_objective(s, g, 0.5, p).total, exact, 1e-3 * exact);
}

TEST(Compare, IdenticalInputs) {
  const auto arr = arrivals_of(normal_legs(5));
  const auto p = Penalty::linear(0.1);
  const auto c = analytic_objective_normal(solve_schedule(arr, 0.5, p), arr, 0.5, p);
  const auto cmp = per_client_compare(c, c);
  for (double d : cmp.total_deltas) EXPECT_EQ(d, 0.0);
  for (const auto& d : cmp.deltas) {
    EXPECT_EQ(d.late, 0.0);
    EXPECT_EQ(d.early, 0.0);
    EXPECT_EQ(d.width, 0.0);
  }
  EXPECT_EQ(cmp.spread_a, cmp.spread_b);
  EXPECT_GT(cmp.spread_a, 0.0);
}

TEST(Compare, LengthMismatch) {
  CostBreakdown a;
  a.per_client.resize(2);
  CostBreakdown b;
  b.per_client.resize(3);
  EXPECT_THROW(per_client_compare(a, b), LengthMismatch);
}

TEST(Compare, BreakdownCsv) {
  CostBreakdown c;
  c.per_client = {{0.5, 0.25, 0.125}, {1.0, 0.0, 2.0}};
  c.total = 3.875;
  std::ostringstream os;
  write_breakdown_csv(os, c);
  EXPECT_EQ(os.str(), "client,late,early,width,total\n1,0.5,0.25,0.125,0.875\n2,1,0,2,3\n");
}
