#include "twopt/datafit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string_view>

#include <json.hpp>

#include "twopt/errors.hpp"
#include "twopt/normal.hpp"
#include "twopt/rng.hpp"
#include "twopt/table.hpp"

namespace twopt {

namespace {

constexpr const char* kHeader = "distance_km,time_min";
constexpr double kLog2Pi = 1.8378770664093454836;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

double parse_field(std::string_view f, std::size_t line, const char* name) {
  f = trim(f);
  double v = 0.0;
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line) + ": field " + name + ": not a number '" +
                     std::string(f) + "'");
  }
  return v;
}

double log_density(const MixtureComponent& c, const StopPair& p) {
  const double z = (p.time - c.a - c.b * p.distance) / c.sigma;
  return -0.5 * (kLog2Pi + z * z) - std::log(c.sigma);
}

}  // namespace

std::vector<StopPair> read_pairs_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  bool got = false;
  while ((got = static_cast<bool>(std::getline(is, line)))) {
    ++lineno;
    if (line.empty() || line[0] != '#') break;
  }
  if (!got) throw ParseError("line 1: empty file; expected header '" + std::string(kHeader) + "'");
  std::string_view head = trim(line);
  if (head.size() >= 3 && head.substr(0, 3) == "\xEF\xBB\xBF") head.remove_prefix(3);
  if (head != kHeader) {
    throw ParseError("line " + std::to_string(lineno) + ": expected header '" + std::string(kHeader) +
                     "', got '" + std::string(head) + "'");
  }
  std::vector<StopPair> rows;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view s = trim(line);
    if (s.empty()) continue;
    const auto comma = s.find(',');
    if (comma == std::string_view::npos || s.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError("line " + std::to_string(lineno) + ": expected 2 comma-separated fields");
    }
    rows.push_back({parse_field(s.substr(0, comma), lineno, "distance_km"),
                    parse_field(s.substr(comma + 1), lineno, "time_min")});
  }
  return rows;
}

std::vector<StopPair> read_pairs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_pairs_csv(in);
}

void write_pairs_csv(std::ostream& os, std::span<const StopPair> rows) {
  os << kHeader << '\n';
  for (const auto& r : rows) os << format_double(r.distance) << ',' << format_double(r.time) << '\n';
}

DataSplit load_and_clean(std::span<const StopPair> rows, std::uint64_t seed) {
  std::vector<StopPair> kept;
  for (const auto& r : rows) {
    if (std::isfinite(r.distance) && std::isfinite(r.time) && r.distance >= 2.0 && r.time > 0.0) {
      kept.push_back(r);
    }
  }
  const std::size_t m = kept.size() * 25 / 1000;
  std::vector<std::size_t> order(kept.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return kept[x].time / kept[x].distance < kept[y].time / kept[y].distance;
  });
  std::vector<bool> drop(kept.size(), false);
  for (std::size_t k = 0; k < m; ++k) {
    drop[order[k]] = true;
    drop[order[order.size() - 1 - k]] = true;
  }
  std::vector<StopPair> clean;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (!drop[i]) clean.push_back(kept[i]);
  }
  if (clean.empty()) throw EmptyAfterCleaning("no stop pairs left after cleaning");

  for (std::size_t i = clean.size() - 1; i > 0; --i) {
    const double u = uniform01(seed, 0, 0, static_cast<std::uint32_t>(i));
    const auto j = std::min(i, static_cast<std::size_t>(u * static_cast<double>(i + 1)));
    std::swap(clean[i], clean[j]);
  }
  const std::size_t cut = clean.size() * 7 / 10;
  DataSplit s;
  s.train.assign(clean.begin(), clean.begin() + static_cast<std::ptrdiff_t>(cut));
  s.test.assign(clean.begin() + static_cast<std::ptrdiff_t>(cut), clean.end());
  return s;
}

double mixture_log_likelihood(const MixtureModel& model, std::span<const StopPair> data) {
  double ll = 0.0;
  std::vector<double> lp(model.components.size());
  for (const auto& p : data) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < lp.size(); ++k) {
      lp[k] = std::log(model.components[k].w) + log_density(model.components[k], p);
      mx = std::max(mx, lp[k]);
    }
    double s = 0.0;
    for (double v : lp) s += std::exp(v - mx);
    ll += mx + std::log(s);
  }
  return ll;
}

EmFit fit_mixture_em(std::span<const StopPair> train, int K, std::uint64_t seed, int max_iter,
                     const EmObserver& observer) {
  if (K < 1) throw DomainError("K must be >= 1");
  const auto N = train.size();
  if (N < 2 * static_cast<std::size_t>(K)) {
    throw DomainError("EM needs at least 2K training pairs; got " + std::to_string(N));
  }
  double ybar = 0.0;
  double slope_ref = 0.0;
  for (const auto& p : train) ybar += p.distance;
  ybar /= static_cast<double>(N);
  double var = 0.0;
  for (const auto& p : train) {
    var += (p.distance - ybar) * (p.distance - ybar);
    slope_ref += (p.time - ybar) / p.distance;
  }
  slope_ref = std::abs(slope_ref / static_cast<double>(N));
  const double sigma_max = 3.0 * ybar;
  const double sigma_min = 1e-6;
  const double sigma0 = std::clamp(std::sqrt(var / static_cast<double>(N - 1)), sigma_min, sigma_max);

  std::uint32_t draw = 0;
  const auto init_component = [&](MixtureComponent& c) {
    c.a = uniform01(seed, 1, 0, draw++) * ybar;
    c.b = uniform01(seed, 1, 0, draw++) * slope_ref;
    c.sigma = sigma0;
  };

  EmFit fit;
  MixtureModel& m = fit.model;
  m.components.resize(static_cast<std::size_t>(K));
  for (auto& c : m.components) {
    init_component(c);
    c.w = 1.0 / K;
  }
  std::vector<int> reseeded(static_cast<std::size_t>(K), 0);
  std::vector<double> resp(N * static_cast<std::size_t>(K));
  std::vector<double> lp(static_cast<std::size_t>(K));

  double prev = mixture_log_likelihood(m, train);
  fit.log_likelihood.push_back(prev);
  if (observer) observer(0, m);

  for (int it = 1; it <= max_iter; ++it) {
    // E-step
    for (std::size_t i = 0; i < N; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < lp.size(); ++k) {
        lp[k] = std::log(m.components[k].w) + log_density(m.components[k], train[i]);
        mx = std::max(mx, lp[k]);
      }
      double s = 0.0;
      for (std::size_t k = 0; k < lp.size(); ++k) s += (lp[k] = std::exp(lp[k] - mx));
      for (std::size_t k = 0; k < lp.size(); ++k) resp[i * lp.size() + k] = lp[k] / s;
    }
    // M-step
    bool reseed_now = false;
    double wsum = 0.0;
    for (std::size_t k = 0; k < lp.size(); ++k) {
      double Sw = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0, Syy = 0;
      for (std::size_t i = 0; i < N; ++i) {
        const double r = resp[i * lp.size() + k];
        const double x = train[i].distance;
        const double y = train[i].time;
        Sw += r;
        Sx += r * x;
        Sy += r * y;
        Sxx += r * x * x;
        Sxy += r * x * y;
        Syy += r * y * y;
      }
      MixtureComponent& c = m.components[k];
      if (Sw < 1e-9) {
        if (reseeded[k]++ > 0) {
          throw DegenerateComponent("component " + std::to_string(k + 1) +
                                    " lost all responsibility mass after a reseed");
        }
        init_component(c);
        c.w = 1.0 / K;
        wsum += c.w;
        ++fit.reseeds;
        reseed_now = true;
        continue;
      }
      const auto rss = [&](double a, double b) {
        return Syy - 2 * a * Sy - 2 * b * Sxy + a * a * Sw + 2 * a * b * Sx + b * b * Sxx;
      };
      double a = 0.0;
      double b = 0.0;
      const double det = Sw * Sxx - Sx * Sx;
      bool interior = false;
      if (det > 0.0) {
        b = (Sw * Sxy - Sx * Sy) / det;
        a = (Sy - b * Sx) / Sw;
        interior = a >= 0.0 && b >= 0.0;
      }
      if (!interior) {
        const double b0 = Sxx > 0.0 ? std::max(0.0, Sxy / Sxx) : 0.0;
        const double a0 = std::max(0.0, Sy / Sw);
        if (rss(0.0, b0) <= rss(a0, 0.0)) {
          a = 0.0;
          b = b0;
        } else {
          a = a0;
          b = 0.0;
        }
      }
      double s2 = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const double e = train[i].time - a - b * train[i].distance;
        s2 += resp[i * lp.size() + k] * e * e;
      }
      c.a = a;
      c.b = b;
      c.sigma = std::clamp(std::sqrt(s2 / Sw), sigma_min, sigma_max);
      c.w = Sw / static_cast<double>(N);
      wsum += c.w;
    }
    for (auto& c : m.components) c.w /= wsum;

    const double ll = mixture_log_likelihood(m, train);
    fit.log_likelihood.push_back(ll);
    fit.iterations = it;
    if (observer) observer(it, m);
    if (!reseed_now && std::abs(ll - prev) < 1e-8) {
      fit.converged = true;
      break;
    }
    prev = ll;
  }
  return fit;
}

int map_assign(const MixtureModel& model, const StopPair& pair) {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < model.components.size(); ++k) {
    const double s = std::log(model.components[k].w) + log_density(model.components[k], pair);
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(k);
    }
  }
  return best;
}

std::vector<SampledLeg> sample_route(const MixtureModel& model, std::span<const StopPair> test,
                                     int n, std::uint64_t seed) {
  if (test.empty()) throw EmptyTestSet("cannot sample a route from an empty test set");
  if (n < 1) throw DomainError("route length must be >= 1");
  std::vector<SampledLeg> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(seed, 2, 0, static_cast<std::uint32_t>(i));
    const auto idx = std::min(test.size() - 1, static_cast<std::size_t>(u * static_cast<double>(test.size())));
    const StopPair& p = test[idx];
    const int k = map_assign(model, p);
    const double mean = model.mean_time(k, p.distance);
    out.push_back({TravelTimeDist::normal(mean, model.components[static_cast<std::size_t>(k)].sigma),
                   p.time, k, p});
  }
  return out;
}

std::vector<StopPair> generate_synthetic(int n, std::uint64_t seed) {
  struct Line { double a, b, sigma, w; };
  static constexpr Line lines[] = {{2.0, 1.5, 1.0, 0.5}, {5.0, 2.5, 2.0, 0.3}, {1.0, 4.0, 3.0, 0.2}};
  std::vector<StopPair> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) {
    const auto run = static_cast<std::uint64_t>(i);
    const double u = uniform01(seed, run, 0, 0);
    std::size_t k = 0;
    for (double acc = lines[0].w; k + 1 < std::size(lines) && u > acc; acc += lines[++k].w) {}
    const double d = 1.0 + 11.0 * uniform01(seed, run, 1, 0);
    double t = 0.0;
    for (std::uint32_t draw = 0; t <= 0.0; ++draw) {
      t = lines[k].a + lines[k].b * d + lines[k].sigma * normal_quantile(uniform01(seed, run, 2, draw));
    }
    out.push_back({d, t});
  }
  return out;
}

std::string model_to_json(const MixtureModel& model) {
  nlohmann::json j;
  j["K"] = model.K();
  j["components"] = nlohmann::json::array();
  for (const auto& c : model.components) {
    j["components"].push_back({{"a", c.a}, {"b", c.b}, {"sigma", c.sigma}, {"w", c.w}});
  }
  return j.dump(2);
}

MixtureModel model_from_json(const std::string& text) {
  MixtureModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& c : j.at("components")) {
      m.components.push_back({c.at("a").get<double>(), c.at("b").get<double>(),
                              c.at("sigma").get<double>(), c.at("w").get<double>()});
    }
    if (j.at("K").get<int>() != m.K()) throw ParseError("field K: does not match component count");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
  return m;
}

}  // namespace twopt
