// Command-line front end: verification against the simulation oracles,
// speed/vehicle-count sweeps, one-off solver runs, and chart rendering.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairaoi/charts.hpp"
#include "fairaoi/common.hpp"
#include "fairaoi/config_file.hpp"
#include "fairaoi/evaluate.hpp"
#include "fairaoi/experiments.hpp"
#include "fairaoi/llm_http.hpp"
#include "fairaoi/moead.hpp"
#include "fairaoi/sca.hpp"
#include "fairaoi/scenario.hpp"

namespace {

using namespace fairaoi;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
};

ScenarioConfig load_or_default(const CommonArgs& args) {
  ScenarioConfig cfg;
  if (!args.config_path.empty()) cfg = load_config(args.config_path);
  cfg.validate();
  return cfg;
}

std::vector<double> linear_grid(double lo, double hi, int steps) {
  if (steps < 1) throw config_error("grid: steps must be >= 1");
  if (steps == 1) return {lo};
  std::vector<double> g(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (steps - 1);
  return g;
}

SweepSpec::Solver parse_solver(const std::string& name) {
  if (name == "sca") return SweepSpec::Solver::sca;
  if (name == "moead") return SweepSpec::Solver::moead;
  if (name == "both") return SweepSpec::Solver::both;
  if (name == "baseline") return SweepSpec::Solver::baseline_only;
  throw config_error("unknown solver '" + name + "' (expected sca|moead|both|baseline)");
}

std::unique_ptr<HttpCompletionClient> make_client(const std::string& endpoint,
                                                  const ScenarioConfig& cfg) {
  if (endpoint.empty()) return nullptr;
  HttpCompletionSettings s;
  s.endpoint = endpoint;
  s.timeout_s = cfg.llm_timeout_s;
  return std::make_unique<HttpCompletionClient>(HttpCompletionSettings::from_env(std::move(s)));
}

int cmd_verify(const CommonArgs& args, std::int64_t trials) {
  ScenarioConfig cfg = load_or_default(args);
  VerifyReport rep = run_verify(cfg, trials, args.seed);
  for (const VerifyLine& l : rep.lines) std::cout << format_verify_line(l) << "\n";
  write_csv(verify_table(rep), args.out_dir + "/verify_report.csv");
  std::cout << (rep.all_pass ? "VERIFY OK" : "VERIFY FAILED") << " (trials=" << trials
            << ", seed=" << args.seed << ", config=" << config_hash(cfg) << ")\n";
  return rep.all_pass ? 0 : 1;
}

int cmd_sweep(const CommonArgs& args, SweepSpec spec, const std::string& llm_endpoint,
              const std::string& stem) {
  ScenarioConfig cfg = load_or_default(args);
  std::unique_ptr<HttpCompletionClient> client = make_client(llm_endpoint, cfg);
  spec.base_seed = args.seed;
  SweepResult res = run_sweep(spec, cfg, client.get());
  std::vector<std::string> paths = write_sweep_outputs(res, args.out_dir, stem);
  std::size_t failures = 0;
  for (const SweepRow& r : res.rows)
    if (r.status != "ok") ++failures;
  for (const std::string& p : paths) std::cout << "wrote " << p << "\n";
  std::cout << "rows=" << res.rows.size() << " failed=" << failures << "\n";
  return 0;
}

int cmd_optimize_sca(const CommonArgs& args, int vehicles_n) {
  ScenarioConfig cfg = load_or_default(args);
  std::size_t n = vehicles_n > 0 ? static_cast<std::size_t>(vehicles_n) : cfg.lane_speeds.size();
  std::vector<Vehicle> vehicles = snapshot_vehicles(cfg, n);
  ScaResult res = sca_run(cfg, vehicles);
  std::vector<double> w(res.rounded_w.begin(), res.rounded_w.end());
  Evaluation ev = evaluate_objectives(vehicles, w, cfg);

  CsvTable result;
  result.header = {"vehicle",      "lane",         "speed_mps",   "window_slots",
                   "fairness_index", "fairness_dev", "link_aoi",  "mean_aoi",
                   "converged",    "seed",         "config_hash"};
  for (std::size_t v = 0; v < vehicles.size(); ++v)
    result.rows.push_back({std::to_string(v), std::to_string(vehicles[v].lane),
                           detail::compact_double(vehicles[v].speed_mps),
                           std::to_string(res.rounded_w[v]),
                           detail::compact_double(ev.fairness.index[v]),
                           detail::compact_double(ev.fairness.deviation[v]),
                           detail::compact_double(ev.aoi.per_link[v]),
                           detail::compact_double(ev.aoi.mean),
                           res.converged ? "1" : "0", std::to_string(args.seed),
                           config_hash(cfg)});
  write_csv(result, args.out_dir + "/sca_result.csv");

  CsvTable trace;
  trace.header = {"iterate"};
  for (std::size_t v = 0; v < vehicles.size(); ++v) trace.header.push_back("w" + std::to_string(v));
  trace.header.push_back("true_objective");
  trace.header.push_back("step_norm");
  for (const ScaTracePoint& p : res.trace) {
    std::vector<std::string> row{std::to_string(p.iterate)};
    for (double wv : p.w) row.push_back(detail::compact_double(wv));
    row.push_back(detail::compact_double(p.true_objective));
    row.push_back(detail::compact_double(p.step_norm));
    trace.rows.push_back(std::move(row));
  }
  write_csv(trace, args.out_dir + "/sca_trace.csv");

  std::cout << "windows:";
  for (int wi : res.rounded_w) std::cout << " " << wi;
  std::cout << "\nmean_aoi=" << detail::compact_double(ev.aoi.mean)
            << " fairness_mean=" << detail::compact_double(ev.fairness.mean)
            << " converged=" << (res.converged ? "yes" : "no")
            << " iterations=" << res.state.iterate << "\n";
  std::cout << "wrote " << args.out_dir << "/sca_result.csv and sca_trace.csv\n";
  return 0;
}

int cmd_optimize_moead(const CommonArgs& args, int vehicles_n, const std::string& llm_endpoint) {
  ScenarioConfig cfg = load_or_default(args);
  std::size_t n = vehicles_n > 0 ? static_cast<std::size_t>(vehicles_n) : cfg.lane_speeds.size();
  std::vector<Vehicle> vehicles = snapshot_vehicles(cfg, n);
  std::unique_ptr<HttpCompletionClient> client = make_client(llm_endpoint, cfg);
  OffspringOperator op;
  if (client) {
    op.kind = OffspringOperator::Kind::external_text;
    op.client = client.get();
    op.budget = cfg.llm_budget;
  }
  MoeadResult res = moead_run(cfg, vehicles, op, args.seed);

  CsvTable front;
  front.header = {"member"};
  for (std::size_t v = 0; v < n; ++v) front.header.push_back("w" + std::to_string(v));
  for (std::size_t v = 0; v < n; ++v) front.header.push_back("dev" + std::to_string(v));
  front.header.push_back("mean_aoi");
  front.header.push_back("nondominated");
  for (std::size_t i = 0; i < res.pop.members.size(); ++i) {
    const Individual& ind = res.pop.members[i];
    std::vector<std::string> row{std::to_string(i)};
    for (double wv : ind.w) row.push_back(detail::compact_double(wv));
    for (double d : ind.obj.fairness_dev) row.push_back(detail::compact_double(d));
    row.push_back(detail::compact_double(ind.obj.mean_aoi));
    bool nd = std::find(res.nondominated.begin(), res.nondominated.end(), i) !=
              res.nondominated.end();
    row.push_back(nd ? "1" : "0");
    front.rows.push_back(std::move(row));
  }
  write_csv(front, args.out_dir + "/moead_front.csv");

  const Individual& sel = res.selection.chosen;
  std::cout << "selected windows:";
  for (double wv : sel.w) std::cout << " " << detail::compact_double(wv);
  std::cout << "\nmean_aoi=" << detail::compact_double(sel.obj.mean_aoi)
            << " relaxed=" << (res.selection.relaxed ? "yes" : "no")
            << " external_calls=" << res.stats.external_calls
            << " parsed=" << res.stats.external_parsed
            << " fallbacks=" << res.stats.external_fallbacks << "\n";
  std::cout << "wrote " << args.out_dir << "/moead_front.csv\n";
  return 0;
}

int cmd_charts(const CommonArgs& args, const std::vector<std::string>& csvs) {
  int written = 0;
  for (const std::string& path : csvs) {
    std::vector<std::string> out = emit_charts(path, args.out_dir);
    if (out.empty()) {
      std::cerr << "warning: no data rows in " << path << ", no chart written\n";
      continue;
    }
    for (const std::string& p : out) {
      std::cout << "wrote " << p << "\n";
      ++written;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Window selection toolkit: fairness/age models, solvers, sweeps"};
  app.require_subcommand(1);

  CommonArgs common;
  std::int64_t trials = 1000000;
  std::string solver_name = "sca";
  std::string llm_endpoint;
  int vehicles_n = 0;
  int seeds_per_point = 1;
  double grid_min = 0.0, grid_max = 0.0;
  int grid_steps = 0;
  std::vector<std::string> chart_csvs;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "scenario config file (key = value lines)");
    sub->add_option("--seed", common.seed, "base RNG seed");
    sub->add_option("--out", common.out_dir, "output directory");
  };

  CLI::App* verify = app.add_subcommand("verify", "closed forms vs simulation oracles");
  add_common(verify);
  verify->add_option("--trials", trials, "Monte-Carlo trials per estimate");

  CLI::App* sweep_speed = app.add_subcommand("sweep-speed", "sweep the mean lane speed");
  add_common(sweep_speed);
  sweep_speed->add_option("--solver", solver_name, "sca|moead|both|baseline");
  sweep_speed->add_option("--llm-endpoint", llm_endpoint, "completion service URL");
  sweep_speed->add_option("--seeds", seeds_per_point, "seeds per grid point");
  sweep_speed->add_option("--grid-min", grid_min, "lowest mean speed (m/s)");
  sweep_speed->add_option("--grid-max", grid_max, "highest mean speed (m/s)");
  sweep_speed->add_option("--grid-steps", grid_steps, "number of grid points");

  CLI::App* sweep_vehicles = app.add_subcommand("sweep-vehicles", "sweep the vehicle count");
  add_common(sweep_vehicles);
  sweep_vehicles->add_option("--solver", solver_name, "sca|moead|both|baseline");
  sweep_vehicles->add_option("--llm-endpoint", llm_endpoint, "completion service URL");
  sweep_vehicles->add_option("--seeds", seeds_per_point, "seeds per grid point");
  sweep_vehicles->add_option("--grid-min", grid_min, "smallest vehicle count");
  sweep_vehicles->add_option("--grid-max", grid_max, "largest vehicle count");
  sweep_vehicles->add_option("--grid-steps", grid_steps, "number of grid points");

  CLI::App* opt_sca = app.add_subcommand("optimize-sca", "one optimization run, trace included");
  add_common(opt_sca);
  opt_sca->add_option("--vehicles", vehicles_n, "vehicle count (default: one per lane)");

  CLI::App* opt_moead = app.add_subcommand("optimize-moead", "one evolutionary run");
  add_common(opt_moead);
  opt_moead->add_option("--vehicles", vehicles_n, "vehicle count (default: one per lane)");
  opt_moead->add_option("--llm-endpoint", llm_endpoint, "completion service URL");

  CLI::App* charts = app.add_subcommand("charts", "render SVG line charts from CSV files");
  add_common(charts);
  charts->add_option("csv", chart_csvs, "CSV files to render")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!common.out_dir.empty()) std::filesystem::create_directories(common.out_dir);
    if (verify->parsed()) return cmd_verify(common, trials);
    if (sweep_speed->parsed()) {
      SweepSpec spec;
      spec.variable = SweepSpec::Variable::mean_speed;
      spec.solver = parse_solver(solver_name);
      ScenarioConfig cfg = load_or_default(common);
      double lo = grid_steps > 0 ? grid_min : cfg.v_min_mps;
      double hi = grid_steps > 0 ? grid_max : cfg.v_max_mps;
      int steps = grid_steps > 0 ? grid_steps : 6;
      spec.grid = linear_grid(lo, hi, steps);
      spec.seeds_per_point = seeds_per_point;
      return cmd_sweep(common, spec, llm_endpoint, "sweep_speed");
    }
    if (sweep_vehicles->parsed()) {
      SweepSpec spec;
      spec.variable = SweepSpec::Variable::vehicle_count;
      spec.solver = parse_solver(solver_name);
      double lo = grid_steps > 0 ? grid_min : 2;
      double hi = grid_steps > 0 ? grid_max : 8;
      int steps = grid_steps > 0 ? grid_steps : static_cast<int>(hi - lo) + 1;
      spec.grid = linear_grid(lo, hi, steps);
      spec.seeds_per_point = seeds_per_point;
      return cmd_sweep(common, spec, llm_endpoint, "sweep_vehicles");
    }
    if (opt_sca->parsed()) return cmd_optimize_sca(common, vehicles_n);
    if (opt_moead->parsed()) return cmd_optimize_moead(common, vehicles_n, llm_endpoint);
    if (charts->parsed()) return cmd_charts(common, chart_csvs);
  } catch (const config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
