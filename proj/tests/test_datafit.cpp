#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "twopt/datafit.hpp"
#include "twopt/errors.hpp"

using namespace twopt;

namespace {

std::vector<StopPair> line_data(int n, double a, double b, double noise, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ux(2.0, 12.0);
  std::normal_distribution<double> ue(0.0, noise);
  std::vector<StopPair> rows;
  for (int i = 0; i < n; ++i) {
    const double x = ux(gen);
    rows.push_back({x, a + b * x + ue(gen)});
  }
  return rows;
}

Eigen::Vector2d ols(const std::vector<StopPair>& rows) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    X(static_cast<Eigen::Index>(i), 1) = rows[i].distance;
    y(static_cast<Eigen::Index>(i)) = rows[i].time;
  }
  return X.colPivHouseholderQr().solve(y);
}

void expect_valid(const MixtureModel& m, double ybar) {
  double wsum = 0.0;
  for (const auto& c : m.components) {
    EXPECT_GE(c.a, 0.0);
    EXPECT_GE(c.b, 0.0);
    EXPECT_GE(c.sigma, 1e-6);
    EXPECT_LE(c.sigma, 3.0 * ybar);
    EXPECT_GE(c.w, 0.0);
    wsum += c.w;
  }
  EXPECT_NEAR(wsum, 1.0, 1e-12);
}

double mean_distance(const std::vector<StopPair>& rows) {
  double s = 0.0;
  for (const auto& r : rows) s += r.distance;
  return s / static_cast<double>(rows.size());
}

}  // namespace

TEST(Csv, ParsesAndSkipsComments) {
  std::istringstream is("# config_hash=abc seed=1 version=0.1.0\ndistance_km,time_min\n2.5,7\n10,31.25\n");
  const auto rows = read_pairs_csv(is);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (StopPair{2.5, 7.0}));
  EXPECT_EQ(rows[1], (StopPair{10.0, 31.25}));
}

TEST(Csv, RoundTrip) {
  const auto rows = generate_synthetic(50, 4);
  std::ostringstream os;
  write_pairs_csv(os, rows);
  std::istringstream is(os.str());
  EXPECT_EQ(read_pairs_csv(is), rows);
}

TEST(Csv, Errors) {
  std::istringstream bad_header("dist,time\n1,2\n");
  EXPECT_THROW(read_pairs_csv(bad_header), ParseError);
  std::istringstream bad_field("distance_km,time_min\n2,3\n4,abc\n");
  try {
    read_pairs_csv(bad_field);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::istringstream short_row("distance_km,time_min\n2\n");
  EXPECT_THROW(read_pairs_csv(short_row), ParseError);
}

TEST(Clean, DistanceFilter) {
  std::vector<StopPair> rows = line_data(200, 2, 3, 0.5, 1);
  rows.push_back({1.5, 10.0});
  rows.push_back({3.0, 0.0});
  const auto split = load_and_clean(rows, 5);
  for (const auto* part : {&split.train, &split.test}) {
    for (const auto& r : *part) {
      EXPECT_GE(r.distance, 2.0);
      EXPECT_GT(r.time, 0.0);
    }
  }
}

TEST(Clean, TrimsTailsThenSplits) {
  const auto rows = line_data(1000, 2, 3, 1.0, 2);
  const auto split = load_and_clean(rows, 8);
  EXPECT_EQ(split.train.size() + split.test.size(), 950u);
  EXPECT_EQ(split.train.size(), 665u);
  std::vector<double> ratio;
  for (const auto& r : rows) ratio.push_back(r.time / r.distance);
  std::vector<double> sorted = ratio;
  std::sort(sorted.begin(), sorted.end());
  for (const auto* part : {&split.train, &split.test}) {
    for (const auto& r : *part) {
      const double q = r.time / r.distance;
      EXPECT_GT(q, sorted[24]);
      EXPECT_LT(q, sorted[975]);
    }
  }
}

TEST(Clean, Deterministic) {
  const auto rows = line_data(300, 2, 3, 1.0, 3);
  const auto a = load_and_clean(rows, 11);
  const auto b = load_and_clean(rows, 11);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(load_and_clean(rows, 12).train, a.train);
}

TEST(Clean, EmptyAfterCleaning) {
  const std::vector<StopPair> rows{{1.0, 3.0}, {0.5, 2.0}};
  EXPECT_THROW(load_and_clean(rows, 1), EmptyAfterCleaning);
}

TEST(Em, SingleComponentMatchesOls) {
  const auto rows = line_data(400, 2.0, 3.0, 1.0, 7);
  const Eigen::Vector2d beta = ols(rows);
  ASSERT_GT(beta(0), 0.0);
  ASSERT_GT(beta(1), 0.0);
  const auto fit = fit_mixture_em(rows, 1, 1);
  ASSERT_EQ(fit.model.K(), 1);
  EXPECT_NEAR(fit.model.components[0].a, beta(0), 1e-6);
  EXPECT_NEAR(fit.model.components[0].b, beta(1), 1e-6);
  EXPECT_EQ(fit.model.components[0].w, 1.0);
}

TEST(Em, NegativeSlopeClampsToZero) {
  const auto rows = line_data(300, 40.0, -2.0, 1.0, 9);
  const auto fit = fit_mixture_em(rows, 1, 1);
  double ymean = 0.0;
  for (const auto& r : rows) ymean += r.time;
  ymean /= static_cast<double>(rows.size());
  EXPECT_EQ(fit.model.components[0].b, 0.0);
  EXPECT_NEAR(fit.model.components[0].a, ymean, 1e-9);
}

TEST(Em, MonotoneLikelihoodAndConstraints) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (int K : {2, 3, 5, 10}) {
      const auto split = load_and_clean(generate_synthetic(1500, seed), seed);
      const double ybar = mean_distance(split.train);
      int seen = 0;
      const auto fit = fit_mixture_em(split.train, K, seed, 300, [&](int, const MixtureModel& m) {
        ++seen;
        expect_valid(m, ybar);
      });
      EXPECT_GT(seen, 0);
      expect_valid(fit.model, ybar);
      for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
        EXPECT_GE(fit.log_likelihood[i], fit.log_likelihood[i - 1] - 1e-10) << "K=" << K << " it=" << i;
      }
      EXPECT_NEAR(fit.log_likelihood.back(), mixture_log_likelihood(fit.model, split.train),
                  1e-9 * std::abs(fit.log_likelihood.back()));
    }
  }
}

TEST(Em, Deterministic) {
  const auto rows = generate_synthetic(600, 5);
  const auto a = fit_mixture_em(rows, 3, 42, 200);
  const auto b = fit_mixture_em(rows, 3, 42, 200);
  EXPECT_EQ(model_to_json(a.model), model_to_json(b.model));
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
}

TEST(Em, BadArguments) {
  const auto rows = line_data(5, 2, 3, 1, 1);
  EXPECT_THROW(fit_mixture_em(rows, 0, 1), DomainError);
  EXPECT_THROW(fit_mixture_em(rows, 3, 1), DomainError);
}

TEST(Map, Cases) {
  MixtureModel one{{{1.0, 2.0, 1.0, 1.0}}};
  EXPECT_EQ(map_assign(one, {5.0, 100.0}), 0);

  MixtureModel two{{{0.0, 1.0, 5.0, 0.5}, {20.0, 3.0, 0.1, 0.5}}};
  EXPECT_EQ(map_assign(two, {4.0, 32.0}), 1);

  MixtureModel tie{{{1.0, 2.0, 1.5, 0.5}, {1.0, 2.0, 1.5, 0.5}}};
  EXPECT_EQ(map_assign(tie, {3.0, 7.5}), 0);
}

TEST(Map, RescaleInvariant) {
  const auto rows = generate_synthetic(400, 6);
  const auto fit = fit_mixture_em(rows, 3, 6, 200);
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    MixtureModel scaled = fit.model;
    for (auto& comp : scaled.components) comp.w *= c;
    for (const auto& r : rows) EXPECT_EQ(map_assign(scaled, r), map_assign(fit.model, r));
  }
}

TEST(SampleRoute, Cases) {
  const auto rows = generate_synthetic(400, 7);
  const auto fit = fit_mixture_em(rows, 3, 7, 200);
  const auto a = sample_route(fit.model, rows, 25, 3);
  const auto b = sample_route(fit.model, rows, 25, 3);
  ASSERT_EQ(a.size(), 25u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].pair, b[i].pair);
    EXPECT_EQ(a[i].component, map_assign(fit.model, a[i].pair));
    EXPECT_EQ(a[i].dist.mean(), fit.model.mean_time(a[i].component, a[i].pair.distance));
    EXPECT_EQ(a[i].dist.sd(), fit.model.components[static_cast<std::size_t>(a[i].component)].sigma);
    EXPECT_EQ(a[i].realized, a[i].pair.time);
  }
  const std::vector<StopPair> single{{4.0, 12.0}};
  const auto s = sample_route(fit.model, single, 3, 1);
  ASSERT_EQ(s.size(), 3u);
  for (const auto& leg : s) EXPECT_EQ(leg.pair, single[0]);
  EXPECT_THROW(sample_route(fit.model, {}, 3, 1), EmptyTestSet);
}

TEST(ModelJson, RoundTrip) {
  MixtureModel m{{{0.5, 2.25, 1.125, 0.25}, {3.0, 0.0, 2.0, 0.75}}};
  const auto back = model_from_json(model_to_json(m));
  ASSERT_EQ(back.K(), 2);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(back.components[k].a, m.components[k].a);
    EXPECT_EQ(back.components[k].b, m.components[k].b);
    EXPECT_EQ(back.components[k].sigma, m.components[k].sigma);
    EXPECT_EQ(back.components[k].w, m.components[k].w);
  }
  EXPECT_THROW(model_from_json("{\"K\": 1}"), ParseError);
  EXPECT_THROW(model_from_json("not json"), ParseError);
}

TEST(Synthetic, Deterministic) {
  EXPECT_EQ(generate_synthetic(100, 3), generate_synthetic(100, 3));
  for (const auto& r : generate_synthetic(500, 3)) {
    EXPECT_GE(r.distance, 1.0);
    EXPECT_LE(r.distance, 12.0);
    EXPECT_GT(r.time, 0.0);
  }
}
