#pragma once

#include <algorithm>
#include <complex>
#include <deque>
#include <optional>
#include <vector>

#include "cuspad/measured.hpp"

namespace cuspad {

// Instantaneous angle difference. Raw (wrapped) inputs get a wrapped result;
// continuous inputs subtract directly so fixed offsets propagate untouched.
inline double angle_difference(double theta_i_deg, double theta_j_deg, bool unwrapped = true) {
  const double d = theta_i_deg - theta_j_deg;
  return unwrapped ? d : wrap_deg(d);
}

// Quadratic three-sample prediction: exact for sequences quadratic in the
// sample index. Works on complex phasors and on plain angle samples.
template <typename T>
inline T tsqpa_predict(const T& v1, const T& v2, const T& v3) {
  return 3.0 * v1 - 3.0 * v2 + v3;
}

// Observation residual between predicted and measured angle.
inline double residual(double theta_pred_deg, double theta_meas_deg) {
  return wrap_deg(theta_pred_deg - theta_meas_deg);
}

// Streaming residual monitor over one angle channel. Keeps the last three
// samples; the residual exists from the fourth sample on. Prediction runs in
// the angle domain, where the three-sample form is exact on quadratics and a
// constant channel offset cancels in the residual identically.
class ResidualMonitor {
 public:
  explicit ResidualMonitor(double jump_threshold_deg) : threshold_(jump_threshold_deg) {}

  // Feeds one sample; returns the residual once warmed up.
  std::optional<double> push(double theta_deg) {
    std::optional<double> r;
    if (lagged_.size() == 3) {
      const double pred = tsqpa_predict(lagged_[2], lagged_[1], lagged_[0]);
      r = residual(pred, theta_deg);
      history_.push_back(*r);
      lagged_.pop_front();
    }
    lagged_.push_back(theta_deg);
    return r;
  }

  bool exceeds_threshold(double r) const { return std::abs(r) > threshold_; }
  double jump_threshold() const { return threshold_; }
  const std::vector<double>& residual_history() const { return history_; }

 private:
  double threshold_;
  std::deque<double> lagged_;
  std::vector<double> history_;
};

// Pre-contingency reference: index and angle of the sample immediately before
// the first residual jump.
struct ReferencePoint {
  int t_ref = -1;            // sample index
  double theta_ref_deg = 0;  // angle at t_ref
};

// Scans residuals of an unwrapped stream; the first sample whose residual
// magnitude exceeds the threshold marks the contingency, and the reference is
// the sample before it.
inline std::optional<ReferencePoint> detect_reference(const AngleTrace& stream,
                                                      double jump_threshold_deg) {
  if (stream.samples_deg.size() < 4) return std::nullopt;
  ResidualMonitor mon(jump_threshold_deg);
  for (std::size_t n = 0; n < stream.samples_deg.size(); ++n) {
    const auto r = mon.push(stream.samples_deg[n]);
    if (r && mon.exceeds_threshold(*r))
      return ReferencePoint{static_cast<int>(n) - 1, stream.samples_deg[n - 1]};
  }
  return std::nullopt;
}

// Cumulative sum of absolute angle deviation from the reference over the w
// samples following t_ref.
inline double cuspad_sum(const AngleTrace& stream, const ReferencePoint& ref, int w) {
  if (ref.t_ref < 0 ||
      static_cast<std::size_t>(ref.t_ref) + static_cast<std::size_t>(w) >= stream.samples_deg.size())
    throw ValidationError("cuspad_sum: fewer than w samples after t_ref");
  double s = 0.0;
  for (int n = 1; n <= w; ++n) s += std::abs(stream.samples_deg[ref.t_ref + n] - ref.theta_ref_deg);
  return s;
}

inline double cuspad_pair(double s_x, double s_y) { return s_x - s_y; }

enum class FeatureMode { AD, CUSPAD };

inline std::string feature_mode_name(FeatureMode m) { return m == FeatureMode::AD ? "ad" : "cuspad"; }

inline FeatureMode feature_mode_from_name(const std::string& s) {
  if (s == "ad" || s == "AD") return FeatureMode::AD;
  if (s == "cuspad" || s == "CUSPAD") return FeatureMode::CUSPAD;
  throw ParseError("unknown feature mode: " + s);
}

// Per-scenario feature vector over all unordered PMU-bus pairs in canonical
// (ascending bus id, lexicographic) order.
struct FeatureVector {
  FeatureMode mode = FeatureMode::CUSPAD;
  std::vector<std::pair<BusId, BusId>> pairs;
  std::vector<double> values;
  int window_w = 0;
  bool detection_failed = false;
  int t_ref = -1;

  double value_for(BusId x, BusId y) const {
    const auto key = std::minmax(x, y);
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (pairs[i].first == key.first && pairs[i].second == key.second) return values[i];
    throw ValidationError("feature pair not found");
  }
};

struct FeatureOptions {
  FeatureMode mode = FeatureMode::CUSPAD;
  int window_w = 30;
  double jump_threshold_deg = 2.5;
  bool cuspad_absolute = true;   // |S_x - S_y|; signed Eq.-style differences behind the flag
  bool ad_use_mean = false;      // mean |Δθ| over the window instead of the max
};

inline std::vector<std::pair<BusId, BusId>> canonical_pairs(const std::vector<BusId>& buses_sorted) {
  std::vector<std::pair<BusId, BusId>> pairs;
  for (std::size_t i = 0; i < buses_sorted.size(); ++i)
    for (std::size_t j = i + 1; j < buses_sorted.size(); ++j)
      pairs.push_back({buses_sorted[i], buses_sorted[j]});
  return pairs;
}

// Full feature extraction for one measured scenario. A single global
// reference (the earliest per-channel detection) anchors every channel;
// channels that saw no jump reuse it. If no channel detects anything the
// vector is all zeros with the detection_failed flag set.
inline FeatureVector extract_features(const MeasuredScenario& ms, const FeatureOptions& opts) {
  FeatureVector fv;
  fv.mode = opts.mode;
  fv.window_w = opts.window_w;

  std::vector<BusId> buses;
  for (const auto& [bus, tr] : ms.traces) buses.push_back(bus);
  fv.pairs = canonical_pairs(buses);
  fv.values.assign(fv.pairs.size(), 0.0);

  std::map<BusId, AngleTrace> streams;
  for (const auto& [bus, tr] : ms.traces) streams[bus] = tr.unwrapped ? tr : unwrap(tr);

  int global_ref = -1;
  std::size_t min_len = 0;
  for (const auto& [bus, tr] : streams) {
    const auto ref = detect_reference(tr, opts.jump_threshold_deg);
    if (ref && (global_ref < 0 || ref->t_ref < global_ref)) global_ref = ref->t_ref;
    min_len = min_len == 0 ? tr.samples_deg.size() : std::min(min_len, tr.samples_deg.size());
  }
  if (global_ref < 0 || static_cast<std::size_t>(global_ref) + opts.window_w >= min_len) {
    fv.detection_failed = true;
    return fv;
  }
  fv.t_ref = global_ref;

  if (opts.mode == FeatureMode::CUSPAD) {
    std::map<BusId, double> sums;
    for (const auto& [bus, tr] : streams) {
      const ReferencePoint ref{global_ref, tr.samples_deg[global_ref]};
      sums[bus] = cuspad_sum(tr, ref, opts.window_w);
    }
    for (std::size_t p = 0; p < fv.pairs.size(); ++p) {
      const double v = cuspad_pair(sums[fv.pairs[p].first], sums[fv.pairs[p].second]);
      fv.values[p] = opts.cuspad_absolute ? std::abs(v) : v;
    }
  } else {
    for (std::size_t p = 0; p < fv.pairs.size(); ++p) {
      const auto& ti = streams[fv.pairs[p].first].samples_deg;
      const auto& tj = streams[fv.pairs[p].second].samples_deg;
      double acc = 0.0;
      for (int n = 1; n <= opts.window_w; ++n) {
        const double d = std::abs(angle_difference(ti[global_ref + n], tj[global_ref + n]));
        acc = opts.ad_use_mean ? acc + d : std::max(acc, d);
      }
      fv.values[p] = opts.ad_use_mean ? acc / opts.window_w : acc;
    }
  }
  return fv;
}

// --- Feature matrix persistence -------------------------------------------

struct FeatureMatrix {
  std::vector<std::pair<BusId, BusId>> pairs;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<bool> detection_failed;
};

inline FeatureMatrix extract_feature_matrix(const std::vector<MeasuredScenario>& scenarios,
                                            const FeatureOptions& opts) {
  FeatureMatrix m;
  for (const auto& ms : scenarios) {
    FeatureVector fv = extract_features(ms, opts);
    if (m.pairs.empty()) m.pairs = fv.pairs;
    m.rows.push_back(std::move(fv.values));
    m.labels.push_back(ms.base->label);
    m.detection_failed.push_back(fv.detection_failed);
  }
  return m;
}

inline void save_feature_matrix(const std::string& path, const FeatureMatrix& m) {
  std::ostringstream out;
  for (const auto& [a, b] : m.pairs) out << "pair_" << a << "_" << b << ",";
  out << "label,detection_failed\n";
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    for (double v : m.rows[r]) out << fmt_double(v, 17) << ',';
    out << m.labels[r] << ',' << (m.detection_failed[r] ? 1 : 0) << "\n";
  }
  write_text_file(path, out.str());
}

inline FeatureMatrix load_feature_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty feature CSV");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[header.size() - 2] != "label" ||
      header[header.size() - 1] != "detection_failed")
    throw ParseError(path + ": bad feature CSV header");
  FeatureMatrix m;
  for (std::size_t c = 0; c + 2 < header.size(); ++c) {
    const auto& h = header[c];
    if (h.rfind("pair_", 0) != 0) throw ParseError(path + ": bad pair column '" + h + "'");
    const auto us = h.find('_', 5);
    m.pairs.push_back({std::stoi(h.substr(5, us - 5)), std::stoi(h.substr(us + 1))});
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) throw ParseError(path + ": ragged feature CSV row");
    std::vector<double> row(m.pairs.size());
    for (std::size_t c = 0; c < m.pairs.size(); ++c) row[c] = std::stod(fields[c]);
    m.rows.push_back(std::move(row));
    m.labels.push_back(std::stoi(fields[fields.size() - 2]));
    m.detection_failed.push_back(fields[fields.size() - 1] == "1");
  }
  return m;
}

}  // namespace cuspad
