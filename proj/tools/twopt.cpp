// twopt: command-line front end for the window solvers and simulators.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "twopt/arrival.hpp"
#include "twopt/config.hpp"
#include "twopt/datafit.hpp"
#include "twopt/dwos.hpp"
#include "twopt/errors.hpp"
#include "twopt/eval.hpp"
#include "twopt/table.hpp"
#include "twopt/uwos.hpp"
#include "twopt/wos.hpp"

namespace fs = std::filesystem;
using namespace twopt;

namespace {

enum Exit { kOk = 0, kUsage = 1, kSolver = 2, kData = 3 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::EmptyAfterCleaning:
    case ErrorKind::DegenerateComponent:
    case ErrorKind::EmptyTestSet:
      return kData;
    default:
      return kSolver;
  }
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

struct Loaded {
  ExperimentConfig cfg;
  std::vector<TravelTimeDist> legs;
  TableMeta meta;
};

Loaded load(const Common& opt) {
  Loaded l;
  l.cfg = load_config(opt.config);
  if (opt.seed) l.cfg.seed = *opt.seed;
  if (l.cfg.from_data) {
    fs::path csv = l.cfg.from_data->csv;
    if (csv.is_relative()) csv = fs::path(opt.config).parent_path() / csv;
    const auto rows = read_pairs_csv(csv.string());
    const auto split = load_and_clean(rows, l.cfg.seed);
    const auto fit = fit_mixture_em(split.train, l.cfg.from_data->K, l.cfg.seed, l.cfg.from_data->max_iter);
    for (auto& s : sample_route(fit.model, split.test, l.cfg.from_data->n, l.cfg.seed)) {
      l.legs.push_back(s.dist);
    }
  } else {
    l.legs = l.cfg.legs();
  }
  l.meta = {config_hash(l.cfg), l.cfg.seed, kVersion};
  return l;
}

// Writes to --out when given, otherwise stdout.
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot write '" + path + "'");
  f << text;
}

struct Solved {
  std::vector<ArrivalDist> arrivals;
  Schedule schedule;
};

Solved solve(const Loaded& l, bool uniform) {
  Solved s;
  s.arrivals = build_arrivals(std::span<const TravelTimeDist>(l.legs), l.cfg.engine);
  if (uniform) {
    s.schedule = solve_uwos(s.arrivals, l.cfg.omega, l.cfg.penalty).schedule();
  } else {
    s.schedule = solve_schedule(s.arrivals, l.cfg.omega, l.cfg.penalty);
  }
  if (!s.schedule.feasible) warn("window starts are not nondecreasing");
  return s;
}

int cmd_solve(const Common& opt, bool uniform_flag) {
  const Loaded l = load(opt);
  const Solved s = solve(l, uniform_flag || l.cfg.uniform);
  ResultTable t({"client", "t", "delta", "t_end", "centered_t", "centered_end"}, l.meta);
  for (std::size_t i = 0; i < s.schedule.size(); ++i) {
    const Window& w = s.schedule.windows[i];
    const double mu = s.arrivals[i].mean();
    t.add_row({static_cast<double>(i + 1), w.start, w.width, w.end(), w.start - mu, w.end() - mu});
  }
  emit(opt.out, t.to_string());
  return kOk;
}

int cmd_evaluate(const Common& opt, bool compare) {
  const Loaded l = load(opt);
  const std::uint64_t runs = l.cfg.evaluate_runs;
  if (compare) {
    const Solved wos = solve(l, false);
    const Solved uwos = solve(l, true);
    const std::vector<Schedule> both{wos.schedule, uwos.schedule};
    const auto costs = mc_objective(both, l.legs, l.cfg.omega, l.cfg.penalty, runs, l.cfg.seed, opt.threads);
    const auto cmp = per_client_compare(costs[0], costs[1]);
    ResultTable t({"client", "wos_late", "wos_early", "wos_width", "wos_total", "uwos_late", "uwos_early",
                   "uwos_width", "uwos_total", "delta_total"},
                  l.meta);
    for (std::size_t i = 0; i < costs[0].per_client.size(); ++i) {
      const ClientCost& a = costs[0].per_client[i];
      const ClientCost& b = costs[1].per_client[i];
      t.add_row({static_cast<double>(i + 1), a.late, a.early, a.width, a.total(), b.late, b.early, b.width,
                 b.total(), cmp.total_deltas[i]});
    }
    t.add_row({0.0, std::nan(""), std::nan(""), std::nan(""), costs[0].total, std::nan(""), std::nan(""),
               std::nan(""), costs[1].total, costs[0].total - costs[1].total});
    emit(opt.out, t.to_string());
    std::cerr << "wos total " << format_double(costs[0].total) << " (se " << format_double(costs[0].std_error)
              << "), uwos total " << format_double(costs[1].total) << " (se "
              << format_double(costs[1].std_error) << "), spreads " << format_double(cmp.spread_a) << " / "
              << format_double(cmp.spread_b) << '\n';
    return kOk;
  }
  const Solved s = solve(l, l.cfg.uniform);
  const CostBreakdown c = mc_objective(s.schedule, l.legs, l.cfg.omega, l.cfg.penalty, runs, l.cfg.seed, opt.threads);
  ResultTable t({"client", "late", "early", "width", "total"}, l.meta);
  for (std::size_t i = 0; i < c.per_client.size(); ++i) {
    const ClientCost& k = c.per_client[i];
    t.add_row({static_cast<double>(i + 1), k.late, k.early, k.width, k.total()});
  }
  emit(opt.out, t.to_string());
  std::cerr << "total " << format_double(c.total) << " (se " << format_double(c.std_error) << ", runs " << runs
            << ")\n";
  return kOk;
}

int cmd_simulate(const Common& opt) {
  const Loaded l = load(opt);
  if (!l.cfg.dwos) throw ValidationError("simulate needs a dwos block in the config");
  const DwosSpec& d = *l.cfg.dwos;
  const fs::path dir = opt.out.empty() ? fs::path(l.cfg.output_dir.empty() ? "." : l.cfg.output_dir)
                                       : fs::path(opt.out);
  fs::create_directories(dir);

  ResultTable summary({"T", "mean_static_cost", "mean_dwos_cost", "rel_diff_pct"}, l.meta);
  std::vector<std::string> notice_cols{"T", "client", "updates"};
  for (double thr : d.notice_thresholds) notice_cols.push_back("pct_below_" + format_double(thr));
  notice_cols.push_back("mean_notice");
  ResultTable notice(notice_cols, l.meta);

  for (double T : d.thresholds) {
    DwosConfig dc;
    dc.tau = d.tau;
    dc.threshold = T;
    dc.omega = l.cfg.omega;
    dc.penalty = l.cfg.penalty;
    dc.engine = l.cfg.engine;
    dc.runs = d.runs;
    dc.seed = l.cfg.seed;
    const auto recs = simulate_runs(l.legs, dc, opt.threads);
    double st = 0.0;
    double dy = 0.0;
    std::ostringstream jl;
    jl << "{\"meta\":{\"config_hash\":\"" << l.meta.config_hash << "\",\"seed\":" << l.meta.seed
       << ",\"version\":\"" << l.meta.version << "\",\"T\":" << format_double(T) << "}}\n";
    for (std::size_t r = 0; r < recs.size(); ++r) {
      st += recs[r].static_costs.total;
      dy += recs[r].costs.total;
      jl << to_json_line(recs[r], r) << '\n';
    }
    const double R = static_cast<double>(recs.size());
    summary.add_row({T, st / R, dy / R, relative_difference(st / R, dy / R)});
    emit((dir / ("runs_T" + format_double(T) + ".jsonl")).string(), jl.str());

    if (!d.notice_clients.empty()) {
      for (const auto& row : advance_notice_stats(recs, d.notice_clients, d.notice_thresholds)) {
        std::vector<double> v{T, static_cast<double>(row.client), static_cast<double>(row.updates)};
        for (std::size_t k = 0; k < d.notice_thresholds.size(); ++k) {
          v.push_back(row.updates ? row.below_pct[k] : std::nan(""));
        }
        v.push_back(row.mean ? *row.mean : std::nan(""));
        notice.add_row(v);
      }
    }
  }
  emit((dir / "summary.csv").string(), summary.to_string());
  if (!d.notice_clients.empty()) emit((dir / "notice.csv").string(), notice.to_string());
  std::cout << summary.to_string();
  return kOk;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_fit(const std::string& data, int K, std::uint64_t seed, int max_iter, const std::string& out) {
  const std::string text = read_file(data);
  std::istringstream is(text);
  const auto rows = read_pairs_csv(is);
  const auto split = load_and_clean(rows, seed);
  const auto fit = fit_mixture_em(split.train, K, seed, max_iter);
  const std::string hash = fnv1a_hex(text + "\nK=" + std::to_string(K) + "\nmax_iter=" + std::to_string(max_iter));

  auto j = nlohmann::json::parse(model_to_json(fit.model));
  j["meta"] = {{"config_hash", hash}, {"seed", seed}, {"version", kVersion}};
  j["report"] = {{"log_likelihood", fit.log_likelihood.back()},
                 {"iterations", fit.iterations},
                 {"converged", fit.converged},
                 {"reseeds", fit.reseeds},
                 {"train_size", split.train.size()},
                 {"test_size", split.test.size()}};
  emit(out, j.dump(2) + "\n");
  std::cerr << "log_likelihood " << format_double(fit.log_likelihood.back()) << ", iterations " << fit.iterations
            << (fit.converged ? "" : " (iteration cap reached)") << '\n';
  return kOk;
}

int cmd_gen(int n, std::uint64_t seed, const std::string& out) {
  std::ostringstream os;
  os << meta_line({fnv1a_hex("gen-data n=" + std::to_string(n)), seed, kVersion}) << '\n';
  write_pairs_csv(os, generate_synthetic(n, seed));
  emit(out, os.str());
  return kOk;
}

void add_common(CLI::App* sub, Common& opt, bool needs_config = true) {
  if (needs_config) sub->add_option("--config", opt.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", opt.out, "output path");
  sub->add_option("--seed", opt.seed, "overrides the config seed and TW_SEED");
  sub->add_option("--threads", opt.threads, "worker threads, 0 = all cores");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-window optimization under stochastic travel times"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common opt;
  bool uniform = false;
  bool compare = false;
  auto* solve_cmd = app.add_subcommand("solve", "static windows (WOS, or UWOS with --uniform)");
  add_common(solve_cmd, opt);
  solve_cmd->add_flag("--uniform", uniform, "shared window width");
  auto* solve_u = app.add_subcommand("solve-uniform", "same as solve --uniform");
  add_common(solve_u, opt);
  auto* sim = app.add_subcommand("simulate", "dynamic updates over the dwos block's thresholds");
  add_common(sim, opt);
  auto* ev = app.add_subcommand("evaluate", "Monte Carlo cost breakdown of the static schedule");
  add_common(ev, opt);
  ev->add_flag("--compare", compare, "per-client WOS vs UWOS comparison");

  std::string data;
  int K = 10;
  int max_iter = 1000;
  std::uint64_t fit_seed = 1;
  auto* fit = app.add_subcommand("fit-data", "EM mixture of linear regressions on stop pairs");
  fit->add_option("--data", data, "CSV with header distance_km,time_min")->required();
  fit->add_option("--K", K, "mixture components")->check(CLI::PositiveNumber);
  fit->add_option("--max-iter", max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
  fit->add_option("--seed", fit_seed, "seed");
  fit->add_option("--out", opt.out, "model JSON path");

  int gen_n = 5000;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-data", "synthetic stop-pair CSV");
  gen->add_option("--n", gen_n, "rows")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--out", opt.out, "CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(opt, uniform);
    if (solve_u->parsed()) return cmd_solve(opt, true);
    if (sim->parsed()) return cmd_simulate(opt);
    if (ev->parsed()) return cmd_evaluate(opt, compare);
    if (fit->parsed()) return cmd_fit(data, K, fit_seed, max_iter, opt.out);
    if (gen->parsed()) return cmd_gen(gen_n, gen_seed, opt.out);
  } catch (const Error& e) {
    std::cerr << "twopt: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "twopt: " << e.what() << '\n';
    return kSolver;
  }
  return kUsage;
}
