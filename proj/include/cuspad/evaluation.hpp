#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "cuspad/cart.hpp"
#include "cuspad/features.hpp"

namespace cuspad {

struct EvalReport {
  double mean_accuracy_pct = 0.0;
  double ci95_halfwidth_pct = 0.0;
  std::vector<double> trial_accuracies_pct;
  int tree_depth = 0;
  int trials = 0;
  long tp = 0, tn = 0, fp = 0, fn = 0;  // summed over trials
};

inline json eval_report_to_json(const EvalReport& r) {
  return json{{"mean_accuracy_pct", r.mean_accuracy_pct},
              {"ci95_halfwidth_pct", r.ci95_halfwidth_pct},
              {"trial_accuracies_pct", r.trial_accuracies_pct},
              {"tree_depth", r.tree_depth},
              {"trials", r.trials},
              {"confusion", {{"tp", r.tp}, {"tn", r.tn}, {"fp", r.fp}, {"fn", r.fn}}}};
}

inline FeatureMatrix clean_feature_matrix(const std::vector<std::shared_ptr<const ScenarioRecord>>& recs,
                                          const FeatureOptions& fopts) {
  std::vector<MeasuredScenario> clean;
  clean.reserve(recs.size());
  for (const auto& r : recs) clean.push_back(measure_clean(r));
  return extract_feature_matrix(clean, fopts);
}

inline DecisionTree train_on_clean(const std::vector<std::shared_ptr<const ScenarioRecord>>& train,
                                   const FeatureOptions& fopts, int max_depth, int min_leaf = 1) {
  const FeatureMatrix m = clean_feature_matrix(train, fopts);
  return train_cart(m.rows, m.labels, max_depth, min_leaf);
}

inline EvalReport evaluate_tree_repeated(const DecisionTree& tree,
                                         const std::vector<std::shared_ptr<const ScenarioRecord>>& test_base,
                                         const ChannelErrorModel& error_model, int trials,
                                         std::uint64_t seed, const FeatureOptions& fopts, int jobs = 1) {
  EvalReport report;
  report.trials = trials;
  report.tree_depth = tree.depth();
  report.trial_accuracies_pct.assign(trials, 0.0);
  std::vector<std::array<long, 4>> confusion(trials, {0, 0, 0, 0});  // tp, tn, fp, fn

  auto run_trial = [&](int t) {
    const std::uint64_t trial_seed = derive_seed(seed, 0x747269616cULL, static_cast<std::uint64_t>(t));
    long correct = 0;
    auto& conf = confusion[t];
    for (std::size_t i = 0; i < test_base.size(); ++i) {
      const MeasuredScenario ms =
          inject_errors(test_base[i], error_model, derive_seed(trial_seed, i));
      const FeatureVector fv = extract_features(ms, fopts);
      const int pred = predict(tree, fv.values);
      const int truth = test_base[i]->label;
      correct += pred == truth;
      if (truth == 1 && pred == 1) conf[0]++;
      if (truth == 0 && pred == 0) conf[1]++;
      if (truth == 0 && pred == 1) conf[2]++;
      if (truth == 1 && pred == 0) conf[3]++;
    }
    report.trial_accuracies_pct[t] = 100.0 * static_cast<double>(correct) / test_base.size();
  };

  if (jobs <= 1) {
    for (int t = 0; t < trials; ++t) run_trial(t);
  } else {
    std::vector<std::thread> threads;
    std::atomic<int> next{0};
    for (int j = 0; j < jobs; ++j)
      threads.emplace_back([&] {
        for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1)) run_trial(t);
      });
    for (auto& th : threads) th.join();
  }

  double mean = 0.0;
  for (double a : report.trial_accuracies_pct) mean += a;
  mean /= trials;
  double var = 0.0;
  for (double a : report.trial_accuracies_pct) var += (a - mean) * (a - mean);
  var = trials > 1 ? var / (trials - 1) : 0.0;
  report.mean_accuracy_pct = mean;
  report.ci95_halfwidth_pct = 1.96 * std::sqrt(var / trials);
  for (const auto& c : confusion) {
    report.tp += c[0];
    report.tn += c[1];
    report.fp += c[2];
    report.fn += c[3];
  }
  return report;
}

// Trains once on clean features, then repeatedly corrupts the test base with
// fresh derived seeds, re-extracts features and scores the tree. The 95%
// confidence interval uses the normal approximation over trial accuracies.
inline EvalReport evaluate_repeated(const std::vector<std::shared_ptr<const ScenarioRecord>>& train,
                                    const std::vector<std::shared_ptr<const ScenarioRecord>>& test_base,
                                    const ChannelErrorModel& error_model, int trials, std::uint64_t seed,
                                    const FeatureOptions& fopts, int max_depth, int min_leaf = 1,
                                    int jobs = 1) {
  if (trials < 1) throw ValidationError("evaluate_repeated: trials must be >= 1");
  const DecisionTree tree = train_on_clean(train, fopts, max_depth, min_leaf);
  return evaluate_tree_repeated(tree, test_base, error_model, trials, seed, fopts, jobs);
}

}  // namespace cuspad
