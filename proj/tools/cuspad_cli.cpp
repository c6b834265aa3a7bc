// Command line harness for the islanding-detection study pipeline:
// scenario generation, measurement corruption, feature extraction, tree
// training/evaluation, PMU placement and the full report bundle.

#include <cstdio>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cuspad/cuspad.hpp"

namespace {

using namespace cuspad;

std::vector<BusId> parse_bus_list(const std::string& s) {
  std::vector<BusId> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

struct GlobalArgs {
  std::string config_path;
  std::uint64_t seed = 42;
  std::string out = "out";
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
};

ExperimentConfig make_config(const GlobalArgs& g) {
  ExperimentConfig cfg;
  cfg.master_seed = g.seed;
  cfg.jobs = std::max(1, g.jobs);
  if (!g.config_path.empty()) experiment_config_merge_json(cfg, load_json_file(g.config_path));
  return cfg;
}

ExperimentConfig profile_net18(const GlobalArgs& g, const std::string& data_dir, bool quick) {
  ExperimentConfig cfg = make_config(g);
  if (cfg.network_path.empty()) cfg.network_path = data_dir + "/net18.json";
  cfg.wind_fractions = {0.16};
  cfg.max_depth = 5;
  cfg.counts = quick ? ScenarioCounts{30, 39} : ScenarioCounts{200, 267};
  cfg.trials = quick ? 6 : 50;
  return cfg;
}

ExperimentConfig profile_net118(const GlobalArgs& g, const std::string& data_dir, bool quick) {
  ExperimentConfig cfg = make_config(g);
  cfg.network_path = data_dir + "/net118.json";
  cfg.wind_fractions = quick ? std::vector<double>{0.3} : std::vector<double>{0.1, 0.2, 0.3};
  cfg.max_depth = 4;
  cfg.counts = quick ? ScenarioCounts{40, 40} : ScenarioCounts{1000, 1000};
  cfg.trials = quick ? 4 : 50;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CUSPAD islanding detection study pipeline"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "JSON config merged over defaults")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output directory or file");
  app.add_option("--jobs", g.jobs, "worker threads");

  // generate
  auto* gen = app.add_subcommand("generate", "simulate a labeled scenario dataset");
  std::string gen_network;
  int gen_islanding = 10, gen_non = 10;
  double gen_wind = 0.0;
  std::string gen_pmu;
  gen->add_option("--network", gen_network, "network JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--islanding", gen_islanding, "islanding case count");
  gen->add_option("--non-islanding", gen_non, "non-islanding case count");
  gen->add_option("--wind", gen_wind, "wind penetration fraction [0,1]");
  gen->add_option("--pmu", gen_pmu, "comma-separated PMU bus list (default: placement result)");

  // inject
  auto* inj = app.add_subcommand("inject", "write corrupted measurement files for a dataset");
  std::string inj_dataset;
  double inj_sigma = 0.104, inj_range = 0.0;
  inj->add_option("--dataset", inj_dataset, "dataset directory")->required();
  inj->add_option("--sigma", inj_sigma, "PMU noise std dev, degrees");
  inj->add_option("--range", inj_range, "instrumentation offset half-range, degrees");

  // features
  auto* fea = app.add_subcommand("features", "extract a feature matrix from a dataset");
  std::string fea_dataset, fea_mode = "cuspad";
  int fea_window = 30;
  double fea_threshold = 2.5, fea_sigma = 0.0, fea_range = 0.0;
  fea->add_option("--dataset", fea_dataset, "dataset directory")->required();
  fea->add_option("--mode", fea_mode, "ad | cuspad");
  fea->add_option("--window", fea_window, "window length, samples");
  fea->add_option("--threshold", fea_threshold, "residual jump threshold, degrees");
  fea->add_option("--sigma", fea_sigma, "corrupt with PMU noise before extraction");
  fea->add_option("--range", fea_range, "corrupt with instrumentation offsets before extraction");

  // train
  auto* trn = app.add_subcommand("train", "train a decision tree from a feature CSV");
  std::string trn_features;
  int trn_depth = 5, trn_min_leaf = 1;
  trn->add_option("--features", trn_features, "feature CSV")->required()->check(CLI::ExistingFile);
  trn->add_option("--max-depth", trn_depth, "maximum tree depth");
  trn->add_option("--min-leaf", trn_min_leaf, "minimum samples per leaf");

  // evaluate
  auto* eva = app.add_subcommand("evaluate", "repeated-trial accuracy on a dataset");
  std::string eva_dataset, eva_mode = "cuspad";
  double eva_sigma = 0.104, eva_range = 0.0, eva_threshold = 2.5;
  int eva_trials = 50, eva_depth = 5, eva_window = 30, eva_min_leaf = 1;
  eva->add_option("--dataset", eva_dataset, "dataset directory")->required();
  eva->add_option("--mode", eva_mode, "ad | cuspad");
  eva->add_option("--sigma", eva_sigma, "PMU noise std dev, degrees");
  eva->add_option("--range", eva_range, "instrumentation offset half-range, degrees");
  eva->add_option("--trials", eva_trials, "number of corruption trials");
  eva->add_option("--max-depth", eva_depth, "maximum tree depth");
  eva->add_option("--min-leaf", eva_min_leaf, "minimum samples per leaf");
  eva->add_option("--window", eva_window, "window length, samples");
  eva->add_option("--threshold", eva_threshold, "residual jump threshold, degrees");

  // place
  auto* plc = app.add_subcommand("place", "solve the relay placement problem");
  std::string plc_network, plc_mode = "exact";
  double plc_subcost = 1.0, plc_dulr = 0.1;
  bool plc_strict = false;
  std::uint64_t plc_nodes = 20'000'000;
  plc->add_option("--network", plc_network, "network JSON")->required()->check(CLI::ExistingFile);
  plc->add_option("--mode", plc_mode, "exact | greedy");
  plc->add_option("--substation-cost", plc_subcost, "disruption cost per substation");
  plc->add_option("--dulr-cost", plc_dulr, "device cost");
  plc->add_flag("--strict-endpoint", plc_strict, "host-end-only coverage semantics");
  plc->add_option("--node-limit", plc_nodes, "branch-and-bound node budget");

  // sweep-window
  auto* swp = app.add_subcommand("sweep-window", "CUSPAD accuracy vs window length");
  std::string swp_network, swp_sizes = "10,20,30,40";
  double swp_range = 1.0;
  swp->add_option("--network", swp_network, "network JSON")->required()->check(CLI::ExistingFile);
  swp->add_option("--sizes", swp_sizes, "comma-separated window lengths");
  swp->add_option("--range", swp_range, "instrumentation offset half-range, degrees");

  // reproduce
  auto* rep = app.add_subcommand("reproduce", "full study: grids, sweep, placement, summary");
  std::string rep_profile = "full";
  std::string rep_data = "data";
  rep->add_option("--profile", rep_profile, "full | quick");
  rep->add_option("--data-dir", rep_data, "directory holding net18.json / net118.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      ExperimentConfig cfg = make_config(g);
      cfg.network_path = gen_network;
      cfg.counts = {gen_islanding, gen_non};
      const NetworkModel net = load_network(gen_network);
      GenOptions opts = cfg.gen;
      opts.jobs = cfg.jobs;
      opts.pmu_buses = gen_pmu.empty() ? pmu_buses_for(net, cfg) : parse_bus_list(gen_pmu);
      auto records = generate_scenarios(net, cfg.counts, gen_wind, cfg.master_seed, opts);
      json manifest;
      manifest["seed"] = cfg.master_seed;
      json pmus = json::array();
      for (BusId b : opts.pmu_buses) pmus.push_back(b);
      manifest["pmu_buses"] = pmus;
      save_dataset(g.out, records, manifest);
      std::printf("wrote %zu records to %s\n", records.size(), g.out.c_str());
      return 0;
    }
    if (*inj) {
      auto records = load_dataset(inj_dataset);
      const ChannelErrorModel model{inj_sigma, inj_range};
      for (std::size_t i = 0; i < records.size(); ++i) {
        const auto ms = inject_errors(records[i], model, derive_seed(g.seed, i));
        save_measured(inj_dataset, ms, model);
      }
      std::printf("injected errors (%s) into %zu records\n", model.tag().c_str(), records.size());
      return 0;
    }
    if (*fea) {
      auto records = load_dataset(fea_dataset);
      FeatureOptions fopts;
      fopts.mode = feature_mode_from_name(fea_mode);
      fopts.window_w = fea_window;
      fopts.jump_threshold_deg = fea_threshold;
      std::vector<MeasuredScenario> measured;
      const ChannelErrorModel model{fea_sigma, fea_range};
      for (std::size_t i = 0; i < records.size(); ++i)
        measured.push_back(fea_sigma > 0 || fea_range > 0
                               ? inject_errors(records[i], model, derive_seed(g.seed, i))
                               : measure_clean(records[i]));
      const FeatureMatrix m = extract_feature_matrix(measured, fopts);
      save_feature_matrix(g.out, m);
      std::printf("wrote %zu feature rows to %s\n", m.rows.size(), g.out.c_str());
      return 0;
    }
    if (*trn) {
      const FeatureMatrix m = load_feature_matrix(trn_features);
      const DecisionTree tree = train_cart(m.rows, m.labels, trn_depth, trn_min_leaf);
      long correct = 0;
      for (std::size_t i = 0; i < m.rows.size(); ++i) correct += predict(tree, m.rows[i]) == m.labels[i];
      write_json_file(g.out, tree_to_json(tree));
      std::printf("tree depth %d, %zu leaves, training accuracy %.2f%% -> %s\n", tree.depth(),
                  tree.leaf_count(), 100.0 * correct / m.rows.size(), g.out.c_str());
      return 0;
    }
    if (*eva) {
      auto records = load_dataset(eva_dataset);
      FeatureOptions fopts;
      fopts.mode = feature_mode_from_name(eva_mode);
      fopts.window_w = eva_window;
      fopts.jump_threshold_deg = eva_threshold;
      const ChannelErrorModel model{eva_sigma, eva_range};
      const EvalReport r = evaluate_repeated(records, records, model, eva_trials, g.seed, fopts,
                                             eva_depth, eva_min_leaf, std::max(1, g.jobs));
      write_json_file(g.out, eval_report_to_json(r));
      std::printf("%s: accuracy %.2f%% +/- %.2f (95%% CI, %d trials), depth %d -> %s\n",
                  eva_mode.c_str(), r.mean_accuracy_pct, r.ci95_halfwidth_pct, r.trials, r.tree_depth,
                  g.out.c_str());
      return 0;
    }
    if (*plc) {
      const NetworkModel net = load_network(plc_network);
      const auto part = group_substations(net, plc_subcost);
      const auto problem = build_placement_problem(net, part, plc_dulr, plc_strict);
      ExactOptions opts;
      opts.node_limit = plc_nodes;
      const auto sol = solve_placement(problem, plc_mode, opts);
      write_json_file(g.out, placement_to_json(problem, sol));
      std::printf("%s placement: %zu devices, %zu substations, cost %.4f, observable=%s%s -> %s\n",
                  plc_mode.c_str(), sol.selected.size(), sol.disrupted_substations.size(),
                  sol.total_cost, verify_observability(sol, problem) ? "yes" : "NO",
                  sol.proven_optimal ? ", optimal" : "", g.out.c_str());
      return 0;
    }
    if (*swp) {
      ExperimentConfig cfg = make_config(g);
      cfg.network_path = swp_network;
      const NetworkModel net = load_network(swp_network);
      std::vector<int> sizes;
      for (BusId v : parse_bus_list(swp_sizes)) sizes.push_back(v);
      const auto sweep = run_window_sweep(net, cfg, sizes, swp_range);
      write_text_file(g.out, window_sweep_csv(sweep));
      for (const auto& [w, r] : sweep)
        std::printf("w=%2d  accuracy %.2f%% +/- %.2f\n", w, r.mean_accuracy_pct, r.ci95_halfwidth_pct);
      return 0;
    }
    if (*rep) {
      const bool quick = rep_profile == "quick";
      if (!quick && rep_profile != "full")
        throw ValidationError("unknown profile: " + rep_profile);
      ExperimentConfig cfg18 = profile_net18(g, rep_data, quick);
      ExperimentConfig cfg118 = profile_net118(g, rep_data, quick);
      const std::vector<int> sizes = quick ? std::vector<int>{20, 30, 40} : std::vector<int>{10, 20, 30, 40};
      const ReproduceReport report = run_reproduce(cfg18, cfg118, sizes, 1.0, g.out);
      for (const auto& c : report.checks)
        std::printf("%s %s  (%s)\n", c.pass ? "[PASS]" : "[FAIL]", c.name.c_str(), c.detail.c_str());
      std::printf("%s\n", report.all_pass() ? "ALL CHECKS PASSED" : "SOME CHECKS FAILED");
      return report.all_pass() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
