#include "twopt/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "twopt/errors.hpp"
#include "twopt/table.hpp"

namespace twopt {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ParseError("field " + where + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ParseError("field " + (where.empty() ? k : where + "." + k) + ": unknown field");
  }
}

std::string path_of(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

double number(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) throw ParseError("field " + path_of(where, key) + ": missing");
  const json& v = j.at(key);
  if (!v.is_number()) throw ParseError("field " + path_of(where, key) + ": expected a number");
  return v.get<double>();
}

double number_or(const json& j, const std::string& where, const char* key, double fallback) {
  return j.contains(key) ? number(j, where, key) : fallback;
}

std::int64_t integer_or(const json& j, const std::string& where, const char* key, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ParseError("field " + path_of(where, key) + ": expected an integer");
  return v.get<std::int64_t>();
}

std::string string_at(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) throw ParseError("field " + path_of(where, key) + ": missing");
  if (!j.at(key).is_string()) throw ParseError("field " + path_of(where, key) + ": expected a string");
  return j.at(key).get<std::string>();
}

template <class T>
std::vector<T> number_list(const json& j, const std::string& where, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_array()) throw ParseError("field " + path_of(where, key) + ": expected an array");
  std::vector<T> out;
  for (const auto& x : v) {
    if (!x.is_number() || (std::is_integral_v<T> && !x.is_number_integer())) {
      throw ParseError("field " + path_of(where, key) + ": expected numbers");
    }
    out.push_back(x.get<T>());
  }
  return out;
}

std::uint64_t nonneg(std::int64_t v, const std::string& field) {
  if (v < 0) throw ValidationError(field + " must be >= 0");
  return static_cast<std::uint64_t>(v);
}

int to_int(std::int64_t v, const std::string& field) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ValidationError(field + " out of range");
  }
  return static_cast<int>(v);
}

ExperimentConfig from_json(const json& j) {
  only_keys(j, "", {"route", "omega", "penalty", "engine", "uniform", "dwos", "evaluate", "seed", "output"});
  ExperimentConfig c;

  if (!j.contains("route")) throw ParseError("field route: missing");
  const json& r = j.at("route");
  if (r.is_array()) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::string where = "route[" + std::to_string(i) + "]";
      only_keys(r[i], where, {"family", "mean", "sd", "repeat"});
      LegSpec leg;
      try {
        leg.family = family_from_string(string_at(r[i], where, "family"));
      } catch (const DomainError& e) {
        throw ParseError("field " + where + ".family: " + e.what());
      }
      leg.mean = number(r[i], where, "mean");
      leg.sd = number(r[i], where, "sd");
      leg.repeat = to_int(integer_or(r[i], where, "repeat", 1), where + ".repeat");
      c.route.push_back(leg);
    }
  } else if (r.is_object()) {
    only_keys(r, "route", {"from_data"});
    if (!r.contains("from_data")) throw ParseError("field route.from_data: missing");
    const json& d = r.at("from_data");
    only_keys(d, "route.from_data", {"csv", "K", "n", "max_iter"});
    DataRouteSpec spec;
    spec.csv = string_at(d, "route.from_data", "csv");
    spec.K = to_int(integer_or(d, "route.from_data", "K", spec.K), "route.from_data.K");
    spec.n = to_int(integer_or(d, "route.from_data", "n", spec.n), "route.from_data.n");
    spec.max_iter = to_int(integer_or(d, "route.from_data", "max_iter", spec.max_iter), "route.from_data.max_iter");
    c.from_data = spec;
  } else {
    throw ParseError("field route: expected an array of legs or a from_data object");
  }

  c.omega = number(j, "", "omega");

  if (!j.contains("penalty")) throw ParseError("field penalty: missing");
  const json& p = j.at("penalty");
  only_keys(p, "penalty", {"type", "alpha", "beta"});
  const std::string type = string_at(p, "penalty", "type");
  const double alpha = number(p, "penalty", "alpha");
  if (!(alpha > 0.0)) throw ValidationError("penalty.alpha must be > 0");
  if (type == "linear") {
    if (p.contains("beta")) throw ParseError("field penalty.beta: not used by a linear penalty");
    c.penalty = Penalty::linear(alpha);
  } else if (type == "power") {
    const double beta = number(p, "penalty", "beta");
    if (!(beta > 1.0)) {
      throw ValidationError("penalty.beta = " + format_double(beta) +
                            ": a power penalty must be strictly convex, which requires beta > 1");
    }
    c.penalty = Penalty::power(alpha, beta);
  } else {
    throw ParseError("field penalty.type: expected 'linear' or 'power', got '" + type + "'");
  }

  const json e = j.value("engine", json::object());
  only_keys(e, "engine", {"mode", "step", "k", "i0", "max_bins"});
  if (e.contains("mode")) {
    try {
      c.engine.mode = engine_mode_from_string(string_at(e, "engine", "mode"));
    } catch (const DomainError& err) {
      throw ParseError(std::string("field engine.mode: ") + err.what());
    }
  } else {
    const bool all_normal = !c.from_data.has_value() &&
        std::all_of(c.route.begin(), c.route.end(), [](const LegSpec& l) { return l.family == Family::Normal; });
    c.engine.mode = all_normal || c.from_data ? ArrivalEngine::Mode::ExactNormal : ArrivalEngine::Mode::Hybrid;
  }
  c.engine.step = number_or(e, "engine", "step", 1e-3);
  c.engine.half_width_sigmas = number_or(e, "engine", "k", 4.0);
  c.engine.i0 = to_int(integer_or(e, "engine", "i0", 15), "engine.i0");
  c.engine.max_bins = integer_or(e, "engine", "max_bins", 0);

  if (j.contains("uniform")) {
    if (!j.at("uniform").is_boolean()) throw ParseError("field uniform: expected true or false");
    c.uniform = j.at("uniform").get<bool>();
  }

  if (j.contains("dwos")) {
    const json& d = j.at("dwos");
    only_keys(d, "dwos", {"tau", "thresholds", "runs", "notice_clients", "notice_thresholds"});
    DwosSpec s;
    s.tau = number_or(d, "dwos", "tau", s.tau);
    s.thresholds = number_list<double>(d, "dwos", "thresholds", s.thresholds);
    s.runs = nonneg(integer_or(d, "dwos", "runs", static_cast<std::int64_t>(s.runs)), "dwos.runs");
    s.notice_clients = number_list<int>(d, "dwos", "notice_clients", {});
    s.notice_thresholds = number_list<double>(d, "dwos", "notice_thresholds", {});
    c.dwos = s;
  }

  if (j.contains("evaluate")) {
    const json& ev = j.at("evaluate");
    only_keys(ev, "evaluate", {"runs"});
    c.evaluate_runs = nonneg(integer_or(ev, "evaluate", "runs", static_cast<std::int64_t>(c.evaluate_runs)), "evaluate.runs");
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ParseError("field seed: expected a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("output")) {
    only_keys(j.at("output"), "output", {"dir"});
    c.output_dir = string_at(j.at("output"), "output", "dir");
  }
  return c;
}

}  // namespace

bool operator==(const ArrivalEngine& a, const ArrivalEngine& b) {
  return a.mode == b.mode && a.step == b.step && a.half_width_sigmas == b.half_width_sigmas &&
         a.i0 == b.i0 && a.max_bins == b.max_bins;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return route == o.route && from_data == o.from_data && omega == o.omega && penalty == o.penalty &&
         engine == o.engine && uniform == o.uniform && dwos == o.dwos &&
         evaluate_runs == o.evaluate_runs && seed == o.seed && output_dir == o.output_dir;
}

std::vector<TravelTimeDist> ExperimentConfig::legs() const {
  std::vector<TravelTimeDist> out;
  for (const auto& l : route) {
    const auto d = TravelTimeDist::from_moments(l.family, l.mean, l.sd);
    for (int r = 0; r < l.repeat; ++r) out.push_back(d);
  }
  return out;
}

void validate(const ExperimentConfig& c) {
  if (c.route.empty() && !c.from_data) throw ValidationError("route must contain at least one leg");
  for (std::size_t i = 0; i < c.route.size(); ++i) {
    const LegSpec& l = c.route[i];
    const std::string at = "route[" + std::to_string(i) + "]";
    if (l.family == Family::Empirical) throw ValidationError(at + ".family: empirical legs cannot be given by moments");
    if (!(l.mean > 0.0) || !std::isfinite(l.mean)) throw ValidationError(at + ".mean must be > 0");
    if (!(l.sd > 0.0) || !std::isfinite(l.sd)) throw ValidationError(at + ".sd must be > 0");
    if (l.repeat < 1) throw ValidationError(at + ".repeat must be >= 1");
  }
  if (c.from_data) {
    if (c.from_data->K < 1) throw ValidationError("route.from_data.K must be >= 1");
    if (c.from_data->n < 1) throw ValidationError("route.from_data.n must be >= 1");
    if (c.from_data->max_iter < 1) throw ValidationError("route.from_data.max_iter must be >= 1");
  }
  if (!(c.omega > 0.0 && c.omega < 1.0)) throw ValidationError("omega must lie in (0,1), got " + format_double(c.omega));
  if (c.penalty.is_linear() && c.penalty.alpha() > std::min(c.omega, 1.0 - c.omega)) {
    throw ValidationError("linear penalty alpha = " + format_double(c.penalty.alpha()) + " with omega = " +
                          format_double(c.omega) +
                          " violates the existence condition alpha <= min{omega, 1 - omega}");
  }
  if (!(c.engine.step > 0.0)) throw ValidationError("engine.step must be > 0");
  if (!(c.engine.half_width_sigmas > 0.0)) throw ValidationError("engine.k must be > 0");
  if (c.engine.i0 < 1) throw ValidationError("engine.i0 must be >= 1");
  if (c.engine.max_bins != 0 && c.engine.max_bins < 2) throw ValidationError("engine.max_bins must be 0 or >= 2");
  if (c.engine.mode == ArrivalEngine::Mode::ExactNormal) {
    for (const auto& l : c.route) {
      if (l.family != Family::Normal) {
        throw ValidationError(std::string("engine.mode exact_normal needs normal legs; route has a ") +
                              to_string(l.family) + " leg");
      }
    }
  }
  if (c.dwos) {
    if (!(c.dwos->tau > 0.0)) throw ValidationError("dwos.tau must be > 0");
    if (c.dwos->thresholds.empty()) throw ValidationError("dwos.thresholds must not be empty");
    for (double t : c.dwos->thresholds) {
      if (!(t >= 0.0)) throw ValidationError("dwos.thresholds must be >= 0");
    }
    if (c.dwos->runs < 1) throw ValidationError("dwos.runs must be >= 1");
    for (int k : c.dwos->notice_clients) {
      if (k < 1) throw ValidationError("dwos.notice_clients are 1-based indices");
    }
  }
  if (c.evaluate_runs < 1) throw ValidationError("evaluate.runs must be >= 1");
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ParseError("line " + std::to_string(line) + ": invalid JSON (" + e.what() + ")");
  }
  ExperimentConfig c;
  try {
    c = from_json(j);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid config: ") + e.what());
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c = parse_config(ss.str());
  if (const char* env = std::getenv("TW_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || env[0] == '-') throw ParseError("TW_SEED: expected a nonnegative integer, got '" + std::string(env) + "'");
    c.seed = v;
  }
  return c;
}

std::string to_json(const ExperimentConfig& c) {
  json j;
  if (c.from_data) {
    j["route"] = {{"from_data", {{"csv", c.from_data->csv}, {"K", c.from_data->K}, {"n", c.from_data->n},
                                  {"max_iter", c.from_data->max_iter}}}};
  } else {
    j["route"] = json::array();
    for (const auto& l : c.route) {
      j["route"].push_back({{"family", to_string(l.family)}, {"mean", l.mean}, {"sd", l.sd}, {"repeat", l.repeat}});
    }
  }
  j["omega"] = c.omega;
  if (c.penalty.is_linear()) {
    j["penalty"] = {{"type", "linear"}, {"alpha", c.penalty.alpha()}};
  } else {
    j["penalty"] = {{"type", "power"}, {"alpha", c.penalty.alpha()}, {"beta", c.penalty.beta()}};
  }
  j["engine"] = {{"mode", to_string(c.engine.mode)}, {"step", c.engine.step}, {"k", c.engine.half_width_sigmas},
                 {"i0", c.engine.i0}, {"max_bins", c.engine.max_bins}};
  j["uniform"] = c.uniform;
  if (c.dwos) {
    j["dwos"] = {{"tau", c.dwos->tau}, {"thresholds", c.dwos->thresholds}, {"runs", c.dwos->runs},
                 {"notice_clients", c.dwos->notice_clients}, {"notice_thresholds", c.dwos->notice_thresholds}};
  }
  j["evaluate"] = {{"runs", c.evaluate_runs}};
  j["seed"] = c.seed;
  if (!c.output_dir.empty()) j["output"] = {{"dir", c.output_dir}};
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& config) {
  return fnv1a_hex(to_json(config));
}

}  // namespace twopt
