#pragma once

#include <map>
#include <string>
#include <vector>

#include "cuspad/evaluation.hpp"
#include "cuspad/placement.hpp"

namespace cuspad {

struct ExperimentConfig {
  std::string network_path;
  std::vector<double> wind_fractions = {0.16};
  std::vector<double> instr_ranges_deg = {0.0, 0.1, 1.0, 2.0, 4.0};
  double pmu_sigma_deg = 0.104;
  std::vector<FeatureMode> modes = {FeatureMode::AD, FeatureMode::CUSPAD};
  int window_w = 30;
  int trials = 50;
  int max_depth = 5;
  int min_leaf = 1;
  double jump_threshold_deg = 2.5;
  bool cuspad_absolute = true;
  bool ad_use_mean = false;
  ScenarioCounts counts{200, 267};
  std::uint64_t master_seed = 42;
  int jobs = 1;
  std::string placement_mode = "greedy";
  double substation_cost = 1.0;
  double dulr_cost = 0.1;
  GenOptions gen;
  std::string cache_dir;  // empty: no on-disk dataset cache

  FeatureOptions feature_options(FeatureMode mode) const {
    FeatureOptions f;
    f.mode = mode;
    f.window_w = window_w;
    f.jump_threshold_deg = jump_threshold_deg;
    f.cuspad_absolute = cuspad_absolute;
    f.ad_use_mean = ad_use_mean;
    return f;
  }
};

inline json experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  j["network_path"] = c.network_path;
  j["wind_fractions"] = c.wind_fractions;
  j["instr_ranges_deg"] = c.instr_ranges_deg;
  j["pmu_sigma_deg"] = c.pmu_sigma_deg;
  json modes = json::array();
  for (auto m : c.modes) modes.push_back(feature_mode_name(m));
  j["modes"] = modes;
  j["window_w"] = c.window_w;
  j["trials"] = c.trials;
  j["max_depth"] = c.max_depth;
  j["min_leaf"] = c.min_leaf;
  j["jump_threshold_deg"] = c.jump_threshold_deg;
  j["cuspad_absolute"] = c.cuspad_absolute;
  j["ad_use_mean"] = c.ad_use_mean;
  j["counts"] = {{"islanding", c.counts.islanding}, {"non_islanding", c.counts.non_islanding}};
  j["master_seed"] = c.master_seed;
  j["placement_mode"] = c.placement_mode;
  j["substation_cost"] = c.substation_cost;
  j["dulr_cost"] = c.dulr_cost;
  j["gen"] = {{"t_c_min_s", c.gen.t_c_min_s},
              {"t_c_max_s", c.gen.t_c_max_s},
              {"post_window_s", c.gen.post_window_s},
              {"dt_s", c.gen.dt_s},
              {"load_scale_min", c.gen.load_scale_min},
              {"load_scale_max", c.gen.load_scale_max},
              {"dispatch_jitter_min", c.gen.dispatch_jitter_min},
              {"dispatch_jitter_max", c.gen.dispatch_jitter_max},
              {"fault_pu_min", c.gen.fault_pu_min},
              {"fault_pu_max", c.gen.fault_pu_max},
              {"clearing_min_s", c.gen.clearing_min_s},
              {"clearing_max_s", c.gen.clearing_max_s},
              {"cut_pool_size", c.gen.cut_pool_size},
              {"max_cut_branches", c.gen.max_cut_branches},
              {"droop", c.gen.sim.droop},
              {"xd_prime", c.gen.sim.xd_prime}};
  return j;
}

inline void experiment_config_merge_json(ExperimentConfig& c, const json& j) {
  if (j.contains("network_path")) c.network_path = j["network_path"].get<std::string>();
  if (j.contains("wind_fractions")) c.wind_fractions = j["wind_fractions"].get<std::vector<double>>();
  if (j.contains("instr_ranges_deg")) c.instr_ranges_deg = j["instr_ranges_deg"].get<std::vector<double>>();
  if (j.contains("pmu_sigma_deg")) c.pmu_sigma_deg = j["pmu_sigma_deg"].get<double>();
  if (j.contains("modes")) {
    c.modes.clear();
    for (const auto& m : j["modes"]) c.modes.push_back(feature_mode_from_name(m.get<std::string>()));
  }
  if (j.contains("window_w")) c.window_w = j["window_w"].get<int>();
  if (j.contains("trials")) c.trials = j["trials"].get<int>();
  if (j.contains("max_depth")) c.max_depth = j["max_depth"].get<int>();
  if (j.contains("min_leaf")) c.min_leaf = j["min_leaf"].get<int>();
  if (j.contains("jump_threshold_deg")) c.jump_threshold_deg = j["jump_threshold_deg"].get<double>();
  if (j.contains("cuspad_absolute")) c.cuspad_absolute = j["cuspad_absolute"].get<bool>();
  if (j.contains("ad_use_mean")) c.ad_use_mean = j["ad_use_mean"].get<bool>();
  if (j.contains("counts")) {
    c.counts.islanding = j["counts"]["islanding"].get<int>();
    c.counts.non_islanding = j["counts"]["non_islanding"].get<int>();
  }
  if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
  if (j.contains("placement_mode")) c.placement_mode = j["placement_mode"].get<std::string>();
  if (j.contains("substation_cost")) c.substation_cost = j["substation_cost"].get<double>();
  if (j.contains("dulr_cost")) c.dulr_cost = j["dulr_cost"].get<double>();
  if (j.contains("gen")) {
    const auto& g = j["gen"];
    if (g.contains("t_c_min_s")) c.gen.t_c_min_s = g["t_c_min_s"].get<double>();
    if (g.contains("t_c_max_s")) c.gen.t_c_max_s = g["t_c_max_s"].get<double>();
    if (g.contains("post_window_s")) c.gen.post_window_s = g["post_window_s"].get<double>();
    if (g.contains("dt_s")) c.gen.dt_s = g["dt_s"].get<double>();
    if (g.contains("load_scale_min")) c.gen.load_scale_min = g["load_scale_min"].get<double>();
    if (g.contains("load_scale_max")) c.gen.load_scale_max = g["load_scale_max"].get<double>();
    if (g.contains("dispatch_jitter_min")) c.gen.dispatch_jitter_min = g["dispatch_jitter_min"].get<double>();
    if (g.contains("dispatch_jitter_max")) c.gen.dispatch_jitter_max = g["dispatch_jitter_max"].get<double>();
    if (g.contains("fault_pu_min")) c.gen.fault_pu_min = g["fault_pu_min"].get<double>();
    if (g.contains("fault_pu_max")) c.gen.fault_pu_max = g["fault_pu_max"].get<double>();
    if (g.contains("clearing_min_s")) c.gen.clearing_min_s = g["clearing_min_s"].get<double>();
    if (g.contains("clearing_max_s")) c.gen.clearing_max_s = g["clearing_max_s"].get<double>();
    if (g.contains("cut_pool_size")) c.gen.cut_pool_size = g["cut_pool_size"].get<int>();
    if (g.contains("max_cut_branches")) c.gen.max_cut_branches = g["max_cut_branches"].get<int>();
    if (g.contains("droop")) c.gen.sim.droop = g["droop"].get<double>();
    if (g.contains("xd_prime")) c.gen.sim.xd_prime = g["xd_prime"].get<double>();
  }
}

// Hash of everything that shapes a generated dataset (not evaluation knobs).
inline std::string dataset_cache_key(const ExperimentConfig& c, const std::string& network_id,
                                     double wind_fraction) {
  json j = experiment_config_to_json(c)["gen"];
  j["network_id"] = network_id;
  j["wind_fraction"] = wind_fraction;
  j["counts"] = {{"islanding", c.counts.islanding}, {"non_islanding", c.counts.non_islanding}};
  j["master_seed"] = c.master_seed;
  return hash_hex(fnv1a64(j.dump()));
}

inline std::string experiment_config_hash(const ExperimentConfig& c) {
  return hash_hex(fnv1a64(experiment_config_to_json(c).dump()));
}

// All repeated-trial evaluations key their corruption streams off the same
// cell coordinates, so a sweep entry and a grid cell with equal coordinates
// see identical draws.
inline std::uint64_t eval_cell_seed(std::uint64_t master_seed, double wind, FeatureMode mode,
                                    double instr_range_deg, int window_w) {
  const std::string key = fmt_double(wind, 12) + "/" + feature_mode_name(mode) + "/" +
                          fmt_double(instr_range_deg, 12) + "/" + std::to_string(window_w);
  return derive_seed(master_seed, 0x6556616c43656c6cULL, fnv1a64(key));
}

// PMU channels come from the placement solution on the same graph.
inline std::vector<BusId> pmu_buses_for(const NetworkModel& net, const ExperimentConfig& cfg) {
  const auto part = group_substations(net, cfg.substation_cost);
  const auto problem = build_placement_problem(net, part, cfg.dulr_cost);
  const auto sol = solve_placement(problem, cfg.placement_mode);
  return sol.pmu_buses;
}

// Builds or loads the labeled dataset for one wind fraction.
inline std::vector<std::shared_ptr<const ScenarioRecord>> build_dataset(
    const NetworkModel& net, const ExperimentConfig& cfg, double wind_fraction) {
  GenOptions gen = cfg.gen;
  gen.jobs = cfg.jobs;
  if (gen.pmu_buses.empty()) gen.pmu_buses = pmu_buses_for(net, cfg);

  const std::string key = dataset_cache_key(cfg, net.id, wind_fraction);
  const std::string cache_path =
      cfg.cache_dir.empty() ? "" : cfg.cache_dir + "/" + net.id + "_" + key;
  if (!cache_path.empty() && std::filesystem::exists(cache_path + "/manifest.json"))
    return load_dataset(cache_path);

  auto records = generate_scenarios(net, cfg.counts, wind_fraction, cfg.master_seed, gen);
  if (!cache_path.empty())
    save_dataset(cache_path, records, json{{"cache_key", key}});
  return records;
}

struct GridCell {
  double wind_fraction = 0.0;
  double instr_range_deg = 0.0;
  FeatureMode mode = FeatureMode::AD;
  EvalReport report;
};

struct ResultsGrid {
  std::vector<GridCell> cells;
  std::string config_hash;

  const EvalReport& at(double wind, double range, FeatureMode mode) const {
    for (const auto& c : cells)
      if (c.wind_fraction == wind && c.instr_range_deg == range && c.mode == mode) return c.report;
    throw ValidationError("grid cell not found");
  }
};

// One clean-trained tree per (wind fraction, mode); error levels vary only
// the test-side corruption.
inline ResultsGrid run_accuracy_grid(const NetworkModel& net, const ExperimentConfig& cfg) {
  ResultsGrid grid;
  grid.config_hash = experiment_config_hash(cfg);
  for (std::size_t wi = 0; wi < cfg.wind_fractions.size(); ++wi) {
    const double wind = cfg.wind_fractions[wi];
    auto records = build_dataset(net, cfg, wind);
    for (FeatureMode mode : cfg.modes) {
      const FeatureOptions fopts = cfg.feature_options(mode);
      const DecisionTree tree = train_on_clean(records, fopts, cfg.max_depth, cfg.min_leaf);
      for (double range : cfg.instr_ranges_deg) {
        const ChannelErrorModel model{cfg.pmu_sigma_deg, range};
        const std::uint64_t eval_seed = eval_cell_seed(cfg.master_seed, wind, mode, range, cfg.window_w);
        GridCell cell;
        cell.wind_fraction = wind;
        cell.instr_range_deg = range;
        cell.mode = mode;
        cell.report =
            evaluate_tree_repeated(tree, records, model, cfg.trials, eval_seed, fopts, cfg.jobs);
        grid.cells.push_back(std::move(cell));
      }
    }
  }
  return grid;
}

inline json grid_to_json(const ResultsGrid& grid) {
  json cells = json::array();
  for (const auto& c : grid.cells) {
    json j = eval_report_to_json(c.report);
    j["wind_fraction"] = c.wind_fraction;
    j["instr_range_deg"] = c.instr_range_deg;
    j["mode"] = feature_mode_name(c.mode);
    cells.push_back(std::move(j));
  }
  return json{{"config_hash", grid.config_hash}, {"cells", cells}};
}

// Accuracy table in the usual side-by-side layout, one block per wind level.
inline std::string grid_to_table(const ResultsGrid& grid, const ExperimentConfig& cfg,
                                 const std::string& network_id) {
  std::ostringstream out;
  auto fmt_acc = [](const EvalReport& r) {
    char buf[64];
    if (r.ci95_halfwidth_pct < 0.005)
      std::snprintf(buf, sizeof(buf), "%.2f", r.mean_accuracy_pct);
    else
      std::snprintf(buf, sizeof(buf), "%.2f +/- %.2f", r.mean_accuracy_pct, r.ci95_halfwidth_pct);
    return std::string(buf);
  };
  for (double wind : cfg.wind_fractions) {
    out << "Accuracy comparison, " << network_id << ", wind penetration " << fmt_double(100.0 * wind, 4)
        << "% (trials=" << cfg.trials << ", w=" << cfg.window_w << ")\n";
    out << "instr_error_deg |        AD accuracy | depth |    CUSPAD accuracy | depth\n";
    out << "----------------+--------------------+-------+--------------------+------\n";
    for (double range : cfg.instr_ranges_deg) {
      const auto& ad = grid.at(wind, range, FeatureMode::AD);
      const auto& cu = grid.at(wind, range, FeatureMode::CUSPAD);
      char line[160];
      std::snprintf(line, sizeof(line), "%15s | %18s | %5d | %18s | %5d\n",
                    ("+/-" + fmt_double(range, 4)).c_str(), fmt_acc(ad).c_str(), ad.tree_depth,
                    fmt_acc(cu).c_str(), cu.tree_depth);
      out << line;
    }
    out << "\n";
  }
  return out.str();
}

// CUSPAD accuracy as a function of the window length at one error level.
inline std::map<int, EvalReport> run_window_sweep(const NetworkModel& net, const ExperimentConfig& cfg,
                                                  const std::vector<int>& sizes,
                                                  double instr_range_deg) {
  for (int w : sizes)
    if (w < 5 || w > 60) throw ValidationError("window sweep sizes must lie in [5, 60]");
  auto records = build_dataset(net, cfg, cfg.wind_fractions.front());
  std::map<int, EvalReport> out;
  for (int w : sizes) {
    FeatureOptions fopts = cfg.feature_options(FeatureMode::CUSPAD);
    fopts.window_w = w;
    const DecisionTree tree = train_on_clean(records, fopts, cfg.max_depth, cfg.min_leaf);
    const ChannelErrorModel model{cfg.pmu_sigma_deg, instr_range_deg};
    const std::uint64_t eval_seed =
        eval_cell_seed(cfg.master_seed, cfg.wind_fractions.front(), FeatureMode::CUSPAD, instr_range_deg, w);
    out[w] = evaluate_tree_repeated(tree, records, model, cfg.trials, eval_seed, fopts, cfg.jobs);
  }
  return out;
}

inline std::string window_sweep_csv(const std::map<int, EvalReport>& sweep) {
  std::ostringstream out;
  out << "window_w,mean_accuracy_pct,ci95_halfwidth_pct\n";
  for (const auto& [w, r] : sweep)
    out << w << ',' << fmt_double(r.mean_accuracy_pct, 10) << ',' << fmt_double(r.ci95_halfwidth_pct, 10)
        << "\n";
  return out.str();
}

inline std::string grid_long_csv(const ResultsGrid& grid) {
  std::ostringstream out;
  out << "wind_fraction,instr_range_deg,mode,mean_accuracy_pct,ci95_halfwidth_pct,tree_depth\n";
  for (const auto& c : grid.cells)
    out << fmt_double(c.wind_fraction, 10) << ',' << fmt_double(c.instr_range_deg, 10) << ','
        << feature_mode_name(c.mode) << ',' << fmt_double(c.report.mean_accuracy_pct, 10) << ','
        << fmt_double(c.report.ci95_halfwidth_pct, 10) << ',' << c.report.tree_depth << "\n";
  return out.str();
}

// --- Full report bundle ----------------------------------------------------

struct ReproduceCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ReproduceReport {
  std::vector<ReproduceCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

// Runs both study grids, the window sweep and placement, writing every
// artifact under out_dir. The summary re-evaluates the headline trends at the
// configured scale.
inline ReproduceReport run_reproduce(ExperimentConfig cfg18, ExperimentConfig cfg118,
                                     const std::vector<int>& sweep_sizes, double sweep_range_deg,
                                     const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  cfg18.cache_dir = out_dir + "/cache";
  cfg118.cache_dir = out_dir + "/cache";
  ReproduceReport report;

  const NetworkModel net18 = load_network(cfg18.network_path);
  const NetworkModel net118 = load_network(cfg118.network_path);

  write_json_file(out_dir + "/config_net18.json", experiment_config_to_json(cfg18));
  write_json_file(out_dir + "/config_net118.json", experiment_config_to_json(cfg118));

  const ResultsGrid grid18 = run_accuracy_grid(net18, cfg18);
  write_json_file(out_dir + "/grid_net18.json", grid_to_json(grid18));
  write_text_file(out_dir + "/table_net18.txt", grid_to_table(grid18, cfg18, net18.id));
  write_text_file(out_dir + "/grid_net18.csv", grid_long_csv(grid18));

  const ResultsGrid grid118 = run_accuracy_grid(net118, cfg118);
  write_json_file(out_dir + "/grid_net118.json", grid_to_json(grid118));
  write_text_file(out_dir + "/table_net118.txt", grid_to_table(grid118, cfg118, net118.id));
  write_text_file(out_dir + "/grid_net118.csv", grid_long_csv(grid118));

  const auto sweep = run_window_sweep(net18, cfg18, sweep_sizes, sweep_range_deg);
  write_text_file(out_dir + "/window_sweep_net18.csv", window_sweep_csv(sweep));

  for (const NetworkModel* net : {&net18, &net118}) {
    const auto part = group_substations(*net, cfg18.substation_cost);
    const auto problem = build_placement_problem(*net, part, cfg18.dulr_cost);
    for (const std::string mode : {std::string("exact"), std::string("greedy")}) {
      ExactOptions opts;
      if (net->buses.size() > 30) opts.node_limit = 2'000'000;
      const auto sol = solve_placement(problem, mode, opts);
      write_json_file(out_dir + "/placement_" + net->id + "_" + mode + ".json",
                      placement_to_json(problem, sol));
      report.checks.push_back({"placement_observability_" + net->id + "_" + mode,
                               verify_observability(sol, problem),
                               "device_count=" + std::to_string(sol.selected.size())});
    }
  }

  auto acc = [](const EvalReport& r) { return r.mean_accuracy_pct; };
  auto add_check = [&](const std::string& name, bool pass, const std::string& detail) {
    report.checks.push_back({name, pass, detail});
  };

  {
    const double w118 = cfg118.wind_fractions.back();
    const auto& cu0 = grid118.at(w118, 0.0, FeatureMode::CUSPAD);
    const auto& cu4 = grid118.at(w118, 4.0, FeatureMode::CUSPAD);
    const auto& ad0 = grid118.at(w118, 0.0, FeatureMode::AD);
    const auto& ad4 = grid118.at(w118, 4.0, FeatureMode::AD);
    add_check("net118_cuspad_flat", std::abs(acc(cu4) - acc(cu0)) <= 2.0,
              fmt_double(acc(cu0), 6) + " vs " + fmt_double(acc(cu4), 6));
    add_check("net118_ad_degraded", acc(ad0) - acc(ad4) >= 15.0,
              fmt_double(acc(ad0), 6) + " vs " + fmt_double(acc(ad4), 6));
    bool monotone = true;
    std::string chain;
    const std::vector<double> ladder = {0.1, 1.0, 2.0, 4.0};
    for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
      const auto& a = grid118.at(w118, ladder[i], FeatureMode::AD);
      const auto& b = grid118.at(w118, ladder[i + 1], FeatureMode::AD);
      if (acc(b) > acc(a) + a.ci95_halfwidth_pct + b.ci95_halfwidth_pct) monotone = false;
      chain += fmt_double(acc(a), 6) + " -> ";
    }
    chain += fmt_double(acc(grid118.at(w118, 4.0, FeatureMode::AD)), 6);
    add_check("net118_ad_monotone_within_ci", monotone, chain);
  }
  {
    const double w18 = cfg18.wind_fractions.front();
    const auto& cu0 = grid18.at(w18, 0.0, FeatureMode::CUSPAD);
    const auto& cu4 = grid18.at(w18, 4.0, FeatureMode::CUSPAD);
    const auto& ad0 = grid18.at(w18, 0.0, FeatureMode::AD);
    const auto& ad4 = grid18.at(w18, 4.0, FeatureMode::AD);
    add_check("net18_cuspad_flat", std::abs(acc(cu4) - acc(cu0)) <= 2.0,
              fmt_double(acc(cu0), 6) + " vs " + fmt_double(acc(cu4), 6));
    add_check("net18_ad_degraded", acc(ad0) - acc(ad4) >= 4.0,
              fmt_double(acc(ad0), 6) + " vs " + fmt_double(acc(ad4), 6));
  }
  if (sweep.count(20) && sweep.count(30) && sweep.count(40)) {
    const double g2030 = acc(sweep.at(30)) - acc(sweep.at(20));
    const double g3040 = acc(sweep.at(40)) - acc(sweep.at(30));
    add_check("window_gain_saturates", g3040 < g2030,
              "gain(20->30)=" + fmt_double(g2030, 6) + " gain(30->40)=" + fmt_double(g3040, 6));
  }

  std::ostringstream summary;
  json jchecks = json::array();
  for (const auto& c : report.checks) {
    summary << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << "  (" << c.detail << ")\n";
    jchecks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  summary << (report.all_pass() ? "ALL CHECKS PASSED\n" : "SOME CHECKS FAILED\n");
  write_text_file(out_dir + "/acceptance_summary.txt", summary.str());
  write_json_file(out_dir + "/acceptance_summary.json", json{{"checks", jchecks}, {"all_pass", report.all_pass()}});
  return report;
}

}  // namespace cuspad
