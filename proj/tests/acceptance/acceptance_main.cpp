// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier checks reuse in-memory datasets; the determinism check
// drives the installed CLI end to end.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "cuspad/cuspad.hpp"

using namespace cuspad;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s  (%s)\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string data_path(const std::string& f) { return std::string(CUSPAD_DATA_DIR) + "/" + f; }

int jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// --- criterion 1: cumulative-sum offset immunity --------------------------

void criterion1() {
  const double t0 = now_s();
  Rng rng(101);
  bool pass = true;
  std::string detail;
  for (int trial = 0; trial < 1000 && pass; ++trial) {
    std::vector<double> s(100);
    s[0] = rng.uniform(-400.0, 400.0);
    for (std::size_t i = 1; i < s.size(); ++i) {
      double d = rng.uniform(-0.05, 0.05);
      if (i == 40) d += (rng.uniform01() < 0.5 ? 1.0 : -1.0) * rng.uniform(4.0, 30.0);
      if (i > 40) d += rng.uniform(-1.5, 1.5);
      s[i] = s[i - 1] + d;
    }
    AngleTrace base;
    base.bus = 1;
    base.rate_hz = 30.0;
    base.samples_deg = s;
    base.unwrapped = true;
    const double c = rng.uniform(-10.0, 10.0);
    AngleTrace off = base;
    for (auto& v : off.samples_deg) v += c;

    // residual invariance, exact
    ResidualMonitor m1(1e300), m2(1e300);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto r1 = m1.push(base.samples_deg[i]);
      const auto r2 = m2.push(off.samples_deg[i]);
      if (r1 && std::abs(*r1 - *r2) > 1e-12) {
        pass = false;
        detail = "residual drift " + fmt_double(std::abs(*r1 - *r2));
        break;
      }
    }
    if (!pass) break;

    const auto ref_t = detect_reference(base, 2.0);
    const auto ref_m = detect_reference(off, 2.0);
    if (!ref_t || !ref_m || ref_t->t_ref != ref_m->t_ref) {
      pass = false;
      detail = "detection index mismatch";
      break;
    }
    const double st = cuspad_sum(base, *ref_t, 30);
    const double sm = cuspad_sum(off, *ref_m, 30);
    if (std::abs(sm - st) > 1e-9 * (1.0 + std::abs(st))) {
      pass = false;
      detail = "sum mismatch " + fmt_double(std::abs(sm - st));
      break;
    }
  }
  const double dt = now_s() - t0;
  if (pass && dt >= 5.0) {
    pass = false;
    detail = "too slow";
  }
  if (pass) detail = "1000 traces, offsets within [-10,10] deg, " + fmt_double(dt, 3) + " s";
  report(1, "cumulative-sum and residual offset immunity", pass, detail);
}

// --- criterion 2: additive offsets propagate exactly into AD ---------------

void criterion2() {
  const auto net = load_network(data_path("net18.json"));
  GenOptions opts;
  opts.pmu_buses = {1, 11, 14, 23, 31};
  opts.jobs = jobs();
  const auto records = generate_scenarios(net, {50, 50}, 0.16, 202, opts);
  bool pass = true;
  std::string detail = "100 scenarios, every sample within 1e-12";
  for (std::size_t i = 0; i < records.size() && pass; ++i) {
    const ChannelErrorModel model{0.0, 4.0};
    const auto ms = inject_errors(records[i], model, derive_seed(77, i));
    for (auto it = ms.traces.begin(); it != ms.traces.end() && pass; ++it) {
      for (auto jt = std::next(it); jt != ms.traces.end() && pass; ++jt) {
        const auto& true_i = records[i]->traces.at(it->first).samples_deg;
        const auto& true_j = records[i]->traces.at(jt->first).samples_deg;
        const double expected_shift = ms.offsets_deg.at(it->first) - ms.offsets_deg.at(jt->first);
        for (std::size_t k = 0; k < true_i.size(); ++k) {
          const double ad_meas = angle_difference(it->second.samples_deg[k], jt->second.samples_deg[k]);
          const double ad_true = angle_difference(true_i[k], true_j[k]);
          if (std::abs(ad_meas - ad_true - expected_shift) > 1e-12) {
            pass = false;
            detail = "drift " + fmt_double(std::abs(ad_meas - ad_true - expected_shift)) + " at " +
                     records[i]->id;
            break;
          }
        }
      }
    }
  }
  report(2, "measured AD equals true AD plus e_i - e_j", pass, detail);
}

// --- criterion 3: quadratic prediction oracle ------------------------------

void criterion3() {
  Rng rng(303);
  bool pass = true;
  std::string detail;
  for (int trial = 0; trial < 1000 && pass; ++trial) {
    const double a0 = rng.uniform(-180.0, 180.0);
    const double a1 = rng.uniform(-2.0, 2.0);
    const double a2 = rng.uniform(-0.5, 0.5);
    const int n = 4 + static_cast<int>(rng.below(12));
    auto theta = [&](int k) { return a0 + a1 * k + a2 * k * k; };
    const double r = residual(tsqpa_predict(theta(n - 1), theta(n - 2), theta(n - 3)), theta(n));
    if (std::abs(r) > 1e-12) {
      pass = false;
      detail = "quadratic residual " + fmt_double(std::abs(r));
    }
  }
  for (int trial = 0; trial < 1000 && pass; ++trial) {
    const double a3 = rng.uniform(-5.0, 5.0);
    const int n = 4 + static_cast<int>(rng.below(3));
    auto theta = [&](int k) { return a3 * k * k * k; };
    const double r = residual(tsqpa_predict(theta(n - 1), theta(n - 2), theta(n - 3)), theta(n));
    if (std::abs(r + 6.0 * a3) > 1e-9 * (1.0 + std::abs(6.0 * a3))) {
      pass = false;
      detail = "cubic residual " + fmt_double(r) + " vs -6*a3 " + fmt_double(-6.0 * a3);
    }
  }
  if (pass) detail = "1000 quadratics exact, cubic third difference = 6*a3";
  report(3, "three-sample quadratic prediction oracle", pass, detail);
}

// --- criteria 4/5/6: study trends ------------------------------------------

ExperimentConfig study_cfg(const std::string& network_file, int max_depth, ScenarioCounts counts,
                           std::vector<double> winds) {
  ExperimentConfig cfg;
  cfg.network_path = data_path(network_file);
  cfg.wind_fractions = std::move(winds);
  cfg.max_depth = max_depth;
  cfg.counts = counts;
  cfg.trials = 50;
  cfg.window_w = 30;
  cfg.master_seed = 42;
  cfg.jobs = jobs();
  return cfg;
}

void criterion4() {
  const double t0 = now_s();
  auto cfg = study_cfg("net118.json", 4, {1000, 1000}, {0.3});
  const auto net = load_network(cfg.network_path);
  const auto grid = run_accuracy_grid(net, cfg);
  const double elapsed = now_s() - t0;

  auto acc = [&](FeatureMode m, double r) { return grid.at(0.3, r, m).mean_accuracy_pct; };
  auto ci = [&](FeatureMode m, double r) { return grid.at(0.3, r, m).ci95_halfwidth_pct; };

  const bool cuspad_flat = std::abs(acc(FeatureMode::CUSPAD, 4.0) - acc(FeatureMode::CUSPAD, 0.0)) <= 2.0;
  const bool ad_degraded = acc(FeatureMode::AD, 0.0) - acc(FeatureMode::AD, 4.0) >= 15.0;
  bool ad_monotone = true;
  const std::vector<double> ladder{0.1, 1.0, 2.0, 4.0};
  for (std::size_t i = 0; i + 1 < ladder.size(); ++i)
    if (acc(FeatureMode::AD, ladder[i + 1]) >
        acc(FeatureMode::AD, ladder[i]) + ci(FeatureMode::AD, ladder[i]) + ci(FeatureMode::AD, ladder[i + 1]))
      ad_monotone = false;

  const double budget_s = 600.0 * std::max(1.0, 4.0 / jobs());
  const bool in_budget = elapsed <= budget_s;

  std::string detail = "cuspad " + fmt_double(acc(FeatureMode::CUSPAD, 0.0), 5) + "->" +
                       fmt_double(acc(FeatureMode::CUSPAD, 4.0), 5) + ", ad " +
                       fmt_double(acc(FeatureMode::AD, 0.0), 5) + "->" +
                       fmt_double(acc(FeatureMode::AD, 0.1), 5) + "->" +
                       fmt_double(acc(FeatureMode::AD, 1.0), 5) + "->" +
                       fmt_double(acc(FeatureMode::AD, 2.0), 5) + "->" +
                       fmt_double(acc(FeatureMode::AD, 4.0), 5) + ", " + fmt_double(elapsed, 4) +
                       " s (budget " + fmt_double(budget_s, 4) + ")";
  report(4, "118-bus trend: flat CUSPAD, degrading AD",
         cuspad_flat && ad_degraded && ad_monotone && in_budget, detail);
}

const std::vector<std::shared_ptr<const ScenarioRecord>>& net18_dataset(const ExperimentConfig& cfg,
                                                                        const NetworkModel& net) {
  static auto records = build_dataset(net, cfg, 0.16);
  return records;
}

void criterion5and6() {
  auto cfg = study_cfg("net18.json", 5, {200, 267}, {0.16});
  const auto net = load_network(cfg.network_path);
  const auto& records = net18_dataset(cfg, net);

  // criterion 5: accuracy grid trends at the 18-bus scale
  {
    ResultsGrid grid;
    for (FeatureMode mode : cfg.modes) {
      const FeatureOptions fopts = cfg.feature_options(mode);
      const DecisionTree tree = train_on_clean(records, fopts, cfg.max_depth, cfg.min_leaf);
      for (double range : cfg.instr_ranges_deg) {
        GridCell cell;
        cell.wind_fraction = 0.16;
        cell.instr_range_deg = range;
        cell.mode = mode;
        cell.report = evaluate_tree_repeated(tree, records, ChannelErrorModel{cfg.pmu_sigma_deg, range},
                                             cfg.trials, eval_cell_seed(42, 0.16, mode, range, 30), fopts,
                                             cfg.jobs);
        grid.cells.push_back(std::move(cell));
      }
    }
    auto acc = [&](FeatureMode m, double r) { return grid.at(0.16, r, m).mean_accuracy_pct; };
    const bool cuspad_flat =
        std::abs(acc(FeatureMode::CUSPAD, 4.0) - acc(FeatureMode::CUSPAD, 0.0)) <= 2.0;
    const bool ad_degraded = acc(FeatureMode::AD, 0.0) - acc(FeatureMode::AD, 4.0) >= 4.0;
    std::string detail = "467 cases (200 islanding); cuspad " +
                         fmt_double(acc(FeatureMode::CUSPAD, 0.0), 5) + "->" +
                         fmt_double(acc(FeatureMode::CUSPAD, 4.0), 5) + ", ad " +
                         fmt_double(acc(FeatureMode::AD, 0.0), 5) + "->" +
                         fmt_double(acc(FeatureMode::AD, 4.0), 5);
    report(5, "18-bus trend: flat CUSPAD, degrading AD", cuspad_flat && ad_degraded, detail);
  }

  // criterion 6: window-length gains saturate
  {
    std::map<int, double> acc_by_w;
    for (int w : {20, 30, 40}) {
      FeatureOptions fopts = cfg.feature_options(FeatureMode::CUSPAD);
      fopts.window_w = w;
      const DecisionTree tree = train_on_clean(records, fopts, cfg.max_depth, cfg.min_leaf);
      const EvalReport r =
          evaluate_tree_repeated(tree, records, ChannelErrorModel{cfg.pmu_sigma_deg, 1.0}, cfg.trials,
                                 eval_cell_seed(42, 0.16, FeatureMode::CUSPAD, 1.0, w), fopts, cfg.jobs);
      acc_by_w[w] = r.mean_accuracy_pct;
    }
    const double g2030 = acc_by_w[30] - acc_by_w[20];
    const double g3040 = acc_by_w[40] - acc_by_w[30];
    report(6, "window gains saturate between w=30 and w=40", g3040 < g2030,
           "acc(20)=" + fmt_double(acc_by_w[20], 5) + " acc(30)=" + fmt_double(acc_by_w[30], 5) +
               " acc(40)=" + fmt_double(acc_by_w[40], 5));
  }
}

// --- criterion 7: placement oracle -----------------------------------------

double brute_force_optimum(const PlacementProblem& p) {
  const int m = p.endpoint_count();
  double best = 1e302;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<char> covered(p.n_vertices, 0);
    std::vector<char> subs(p.substation_cost.size(), 0);
    double cost = 0.0;
    for (int ep = 0; ep < m; ++ep) {
      if (!(mask >> ep & 1)) continue;
      cost += p.dulr_cost;
      if (!subs[p.endpoint_substation(ep)]) {
        subs[p.endpoint_substation(ep)] = 1;
        cost += p.substation_cost[p.endpoint_substation(ep)];
      }
      for (int v : p.covered_by(ep))
        if (v >= 0) covered[v] = 1;
    }
    bool ok = true;
    for (int v = 0; v < p.n_vertices && ok; ++v) ok = covered[v];
    if (ok) best = std::min(best, cost);
  }
  return best;
}

void criterion7() {
  const double t0 = now_s();
  Rng rng(707);
  bool pass = true;
  std::string detail;

  for (int trial = 0; trial < 50 && pass; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(5));
    NetworkModel net;
    net.id = "r" + std::to_string(trial);
    for (int i = 0; i < n; ++i) net.buses.push_back(i + 1);
    for (int i = 1; i < n; ++i) {
      const BusId parent = net.buses[rng.below(i)];
      const bool xf = rng.uniform01() < 0.25;
      net.branches.push_back(
          {parent, net.buses[i], xf ? BranchKind::transformer : BranchKind::line, 5.0});
    }
    while (static_cast<int>(net.branches.size()) < 8 && rng.uniform01() < 0.55) {
      const BusId a = net.buses[rng.below(n)], b = net.buses[rng.below(n)];
      if (a != b) net.branches.push_back({a, b, BranchKind::line, 5.0});
    }
    net.generators = {{net.buses[0], 3.0, 100.0, false}};
    net.rebuild_index();
    auto part = group_substations(net, 1.0);
    for (auto& c : part.costs) c = 0.5 + 2.0 * rng.uniform01();
    const auto p = build_placement_problem(net, part, 0.1 + 0.3 * rng.uniform01());
    const auto sol = solve_placement_exact(p);
    const double oracle = brute_force_optimum(p);
    if (!sol.proven_optimal || std::abs(sol.total_cost - oracle) > 1e-9 ||
        !verify_observability(sol, p)) {
      pass = false;
      detail = "graph " + std::to_string(trial) + ": solver " + fmt_double(sol.total_cost) +
               " oracle " + fmt_double(oracle);
    }
  }

  std::string net_note;
  for (const std::string file : {std::string("net18.json"), std::string("net118.json")}) {
    if (!pass) break;
    const auto net = load_network(data_path(file));
    const auto part = group_substations(net, 1.0);
    const auto p = build_placement_problem(net, part, 0.1);
    ExactOptions opts;
    if (net.buses.size() > 30) opts.node_limit = 1'500'000;
    for (const std::string mode : {std::string("exact"), std::string("greedy")}) {
      const auto sol = solve_placement(p, mode, opts);
      if (!verify_observability(sol, p)) {
        pass = false;
        detail = file + " " + mode + " solution not observable";
      }
      if (mode == "exact") net_note += file + ":" + std::to_string(sol.selected.size()) + "dev ";
    }
  }
  const double elapsed = now_s() - t0;
  if (pass && elapsed >= 60.0) {
    pass = false;
    detail = "too slow: " + fmt_double(elapsed, 4) + " s";
  }
  if (pass)
    detail = "50 exhaustive matches; " + net_note + fmt_double(elapsed, 4) + " s";
  report(7, "placement optimality and observability oracle", pass, detail);
}

// --- criterion 8: error-model statistics ------------------------------------

double ks_uniform_pvalue(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = (xs[i] - lo) / (hi - lo);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::min(1.0, std::max(0.0, p));
}

void criterion8() {
  // pooled noise std over 1e5 samples
  ScenarioRecord rec;
  rec.id = "stats";
  rec.label = 0;
  for (int b = 1; b <= 10; ++b) {
    AngleTrace tr;
    tr.bus = b;
    tr.rate_hz = 30.0;
    tr.samples_deg.assign(10000, 5.0 * b);
    tr.unwrapped = true;
    rec.traces[b] = tr;
  }
  auto base = std::make_shared<const ScenarioRecord>(std::move(rec));
  const auto noisy = inject_errors(base, ChannelErrorModel{0.104, 0.0}, 881);
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (const auto& [bus, tr] : noisy.traces) {
    const auto& truth = base->traces.at(bus).samples_deg;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const double r = tr.samples_deg[i] - truth[i];
      sum += r;
      sum2 += r * r;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt((sum2 - static_cast<double>(n) * mean * mean) / (n - 1));
  const bool sd_ok = sd >= 0.104 * 0.95 && sd <= 0.104 * 1.05;

  // offsets: constant in time, uniform over +/- range across 1e4 channels
  bool const_ok = true;
  std::vector<double> offsets;
  const double range = 4.0;
  for (int chunk = 0; chunk < 1000 && const_ok; ++chunk) {
    ScenarioRecord r2;
    r2.id = "off";
    r2.label = 0;
    for (int b = 1; b <= 10; ++b) {
      AngleTrace tr;
      tr.bus = b;
      tr.rate_hz = 30.0;
      tr.samples_deg.assign(20, 1.0 * b);
      tr.unwrapped = true;
      r2.traces[b] = tr;
    }
    auto sp = std::make_shared<const ScenarioRecord>(std::move(r2));
    const auto ms = inject_errors(sp, ChannelErrorModel{0.0, range}, derive_seed(991, chunk));
    for (const auto& [bus, tr] : ms.traces) {
      const double off = tr.samples_deg[0] - sp->traces.at(bus).samples_deg[0];
      for (std::size_t i = 0; i < tr.samples_deg.size(); ++i)
        if (tr.samples_deg[i] - sp->traces.at(bus).samples_deg[i] != off) const_ok = false;
      offsets.push_back(off);
    }
  }
  const double pval = ks_uniform_pvalue(offsets, -range, range);
  const bool ks_ok = pval > 0.01;
  report(8, "error-model statistics", sd_ok && const_ok && ks_ok,
         "noise sd " + fmt_double(sd, 5) + " (target 0.104 +/- 5%), offsets constant=" +
             (const_ok ? "yes" : "no") + ", KS p=" + fmt_double(pval, 4) + " over " +
             std::to_string(offsets.size()) + " channels");
}

// --- criterion 9: end-to-end determinism ------------------------------------

bool dirs_identical(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<fs::path> rel_a, rel_b;
  for (auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  for (auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) {
    why = "file lists differ";
    return false;
  }
  for (const auto& r : rel_a) {
    std::ifstream fa(a / r, std::ios::binary), fb(b / r, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    if (sa != sb) {
      why = "content differs: " + r.string();
      return false;
    }
  }
  return true;
}

void criterion9() {
  const fs::path base = fs::temp_directory_path() / "cuspad_acceptance_repro";
  fs::remove_all(base);
  fs::create_directories(base);
  const std::string cli = CUSPAD_CLI_PATH;
  bool pass = true;
  std::string detail;
  for (const std::string run : {std::string("runA"), std::string("runB")}) {
    const std::string cmd = cli + " --seed 42 --out " + (base / run).string() +
                            " --jobs " + std::to_string(jobs()) +
                            " reproduce --profile quick --data-dir " + std::string(CUSPAD_DATA_DIR) +
                            " > " + (base / (run + ".log")).string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc == -1) {
      pass = false;
      detail = "could not launch CLI";
    }
  }
  if (pass) {
    std::string why;
    pass = dirs_identical(base / "runA", base / "runB", why);
    detail = pass ? "two quick-profile runs byte-identical" : why;
  }
  report(9, "reproduce --seed 42 is byte-identical", pass, detail);
  if (pass) fs::remove_all(base);
}

}  // namespace

int main() {
  std::printf("acceptance suite (%d worker threads)\n", jobs());
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5and6();
  criterion7();
  criterion8();
  criterion9();
  std::printf(g_failures == 0 ? "ALL CRITERIA PASSED\n" : "%d CRITERIA FAILED\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
