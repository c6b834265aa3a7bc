#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cuspad/measurement.hpp"

namespace cuspad {

// One labeled case: true 30 samples/s angle trajectories at the PMU buses.
struct ScenarioRecord {
  std::string id;
  int label = 0;  // 1 = islanding, 0 = non-islanding
  double t_c_s = 0.0;
  std::map<BusId, AngleTrace> traces;

  std::string network_id;
  double wind_fraction = 0.0;
  ContingencyScript script;
  std::uint64_t seed = 0;
};

struct ScenarioCounts {
  int islanding = 0;
  int non_islanding = 0;
};

struct GenOptions {
  std::vector<BusId> pmu_buses;  // empty: record every bus
  double t_c_min_s = 1.0;
  double t_c_max_s = 1.5;
  double post_window_s = 2.5;  // horizon = t_c + post_window
  double dt_s = 1.0 / 600.0;
  double load_scale_min = 0.9;
  double load_scale_max = 1.1;
  double dispatch_jitter_min = 0.75;
  double dispatch_jitter_max = 1.25;
  double fault_pu_min = 1.0;
  double fault_pu_max = 5.0;
  double clearing_min_s = 0.05;
  double clearing_max_s = 0.2;
  int cut_pool_size = 2500;
  int max_cut_branches = 5;
  // islands are drawn from a small family of canonical shapes per size
  // bucket, echoing partitioning-based island studies; cut variants within a
  // shape differ in the extra branches removed
  int island_shapes_per_bucket = 3;
  int retry_limit = 20;
  int jobs = 1;
  SimOptions sim;
};

namespace detail {

inline bool side_has_synchronous(const NetworkModel& net, const std::vector<BusId>& side) {
  for (const auto& g : net.generators)
    if (!g.is_inverter_based && std::binary_search(side.begin(), side.end(), g.bus)) return true;
  return false;
}

struct ScenarioPools {
  // simulable cuts grouped by canonical island shape (the bus set of the
  // smaller side); shapes are bucketed by island size so singletons, small
  // corners, mid-size pockets and whole regions draw with equal probability
  std::vector<std::vector<std::vector<IslandCut>>> cut_buckets;  // bucket -> shape -> variants
  std::vector<int> safe_line_trips;  // removal keeps the graph connected
  std::vector<int> trippable_generators;
  std::vector<BusId> fault_buses;
};

inline ScenarioPools build_pools(const NetworkModel& net, const GenOptions& opts) {
  ScenarioPools pools;
  auto cuts = enumerate_island_cuts(net, opts.max_cut_branches, opts.cut_pool_size);
  auto bucket_of = [](std::size_t min_side) {
    if (min_side <= 1) return 0;
    if (min_side <= 3) return 1;
    if (min_side <= 9) return 2;
    return 3;
  };
  std::map<int, std::map<std::vector<BusId>, std::vector<IslandCut>>> by_shape;
  for (auto& c : cuts) {
    auto sa = c.side_a, sb = c.side_b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (!side_has_synchronous(net, sa) || !side_has_synchronous(net, sb)) continue;
    const auto& shape = sa.size() <= sb.size() ? sa : sb;
    by_shape[bucket_of(shape.size())][shape].push_back(std::move(c));
  }
  for (auto& [b, shapes] : by_shape) {
    std::vector<std::vector<IslandCut>> kept;
    // prefer shapes with many variants; ties by the shape's bus list
    std::vector<std::pair<std::vector<BusId>, std::vector<IslandCut>*>> order;
    for (auto& [shape, variants] : shapes) order.push_back({shape, &variants});
    std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
      if (x.second->size() != y.second->size()) return x.second->size() > y.second->size();
      return x.first < y.first;
    });
    for (auto& [shape, variants] : order) {
      if (static_cast<int>(kept.size()) >= opts.island_shapes_per_bucket) break;
      kept.push_back(std::move(*variants));
    }
    pools.cut_buckets.push_back(std::move(kept));
  }

  std::vector<bool> removed(net.branches.size(), false);
  for (std::size_t e = 0; e < net.branches.size(); ++e) {
    if (net.branches[e].kind != BranchKind::line) continue;
    removed[e] = true;
    auto comp = connected_components(net, &removed);
    if (*std::max_element(comp.begin(), comp.end()) == 0)
      pools.safe_line_trips.push_back(static_cast<int>(e));
    removed[e] = false;
  }

  const std::size_t sync = net.synchronous_count();
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    if (net.generators[i].is_inverter_based || sync >= 2)
      pools.trippable_generators.push_back(static_cast<int>(i));
  }
  pools.fault_buses = net.buses;
  return pools;
}

}  // namespace detail

// Builds one record; used by generate_scenarios and exposed for tests.
// The record index seeds an independent RNG stream, so generation is a pure
// function of (net, options, seed, index) regardless of worker scheduling.
inline ScenarioRecord build_scenario(const NetworkModel& net, const detail::ScenarioPools& pools,
                                     const GenOptions& opts, double wind_fraction,
                                     std::uint64_t dataset_seed, int index, int label) {
  const std::uint64_t record_seed = derive_seed(dataset_seed, 0x7363656e61ULL, static_cast<std::uint64_t>(index));
  Rng rng(record_seed);

  for (int attempt = 0;; ++attempt) {
    ContingencyScript script;
    const double t_c_raw = rng.uniform(opts.t_c_min_s, opts.t_c_max_s);
    script.t_c_s = std::round(t_c_raw / opts.dt_s) * opts.dt_s;

    SimOptions sim = opts.sim;
    sim.load_scale = rng.uniform(opts.load_scale_min, opts.load_scale_max);
    sim.dispatch_jitter.resize(net.generators.size());
    for (auto& j : sim.dispatch_jitter) j = rng.uniform(opts.dispatch_jitter_min, opts.dispatch_jitter_max);

    if (label == 1) {
      if (pools.cut_buckets.empty())
        throw SimulationError(net.id + ": no simulable island cut available");
      const auto& bucket = pools.cut_buckets[rng.below(pools.cut_buckets.size())];
      const auto& shape = bucket[rng.below(bucket.size())];
      script.kind = ContingencyScript::Kind::island;
      script.cut = shape[rng.below(shape.size())];
    } else {
      // Equal three-way split across the non-islanding disturbance kinds.
      switch (index % 3) {
        case 0:
          if (pools.safe_line_trips.empty()) throw SimulationError(net.id + ": no safe line trip");
          script.kind = ContingencyScript::Kind::line_trip;
          script.branch_id = pools.safe_line_trips[rng.below(pools.safe_line_trips.size())];
          break;
        case 1:
          if (pools.trippable_generators.empty()) throw SimulationError(net.id + ": no trippable generator");
          script.kind = ContingencyScript::Kind::generator_trip;
          script.generator_index =
              pools.trippable_generators[rng.below(pools.trippable_generators.size())];
          break;
        default:
          script.kind = ContingencyScript::Kind::bus_fault;
          script.fault_bus = pools.fault_buses[rng.below(pools.fault_buses.size())];
          script.clearing_time_s = rng.uniform(opts.clearing_min_s, opts.clearing_max_s);
          script.fault_pu = rng.uniform(opts.fault_pu_min, opts.fault_pu_max);
          break;
      }
    }

    try {
      const double horizon = script.t_c_s + opts.post_window_s;
      auto full = simulate(net, script, horizon, opts.dt_s, sim);

      ScenarioRecord rec;
      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "rec_%05d", index);
      rec.id = idbuf;
      rec.label = label;
      rec.t_c_s = script.t_c_s;
      rec.network_id = net.id;
      rec.wind_fraction = wind_fraction;
      rec.script = script;
      rec.seed = record_seed;
      if (opts.pmu_buses.empty()) {
        for (auto& [bus, tr] : full) rec.traces[bus] = quantize_trace(resample_30hz(tr));
      } else {
        for (BusId b : opts.pmu_buses) {
          auto it = full.find(b);
          if (it == full.end()) throw ValidationError(net.id + ": PMU bus " + std::to_string(b) + " unknown");
          rec.traces[b] = quantize_trace(resample_30hz(it->second));
        }
      }
      return rec;
    } catch (const SimulationError&) {
      if (attempt + 1 >= opts.retry_limit) throw;
    }
  }
}

// Generate labeled islanding / non-islanding cases on the wind-adjusted
// network. Islanding records come first. Reproducible from the seed alone.
inline std::vector<std::shared_ptr<const ScenarioRecord>> generate_scenarios(
    const NetworkModel& base_net, const ScenarioCounts& counts, double wind_fraction,
    std::uint64_t seed, const GenOptions& opts = {}) {
  if (counts.islanding < 0 || counts.non_islanding < 0 || counts.islanding + counts.non_islanding < 1)
    throw ValidationError("generate_scenarios: counts must be positive");
  const NetworkModel net = apply_wind_penetration(base_net, wind_fraction);
  const auto pools = detail::build_pools(net, opts);

  const int total = counts.islanding + counts.non_islanding;
  std::vector<std::shared_ptr<const ScenarioRecord>> records(total);

  const int jobs = std::max(1, opts.jobs);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      try {
        const int label = i < counts.islanding ? 1 : 0;
        records[i] = std::make_shared<const ScenarioRecord>(
            build_scenario(net, pools, opts, wind_fraction, seed, i, label));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (jobs == 1) {
    worker(0, total);
  } else {
    std::vector<std::thread> threads;
    const int chunk = (total + jobs - 1) / jobs;
    for (int j = 0; j < jobs; ++j) {
      const int begin = j * chunk;
      const int end = std::min(total, begin + chunk);
      if (begin < end) threads.emplace_back(worker, begin, end);
    }
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

// --- Dataset persistence -------------------------------------------------

inline json script_to_json(const ContingencyScript& s) {
  json j;
  j["kind"] = s.kind_name();
  j["t_c_s"] = s.t_c_s;
  switch (s.kind) {
    case ContingencyScript::Kind::island:
      j["removed_branches"] = s.cut.removed_branches;
      j["side_a"] = s.cut.side_a;
      j["side_b"] = s.cut.side_b;
      break;
    case ContingencyScript::Kind::line_trip:
      j["branch_id"] = s.branch_id;
      break;
    case ContingencyScript::Kind::generator_trip:
      j["generator_index"] = s.generator_index;
      break;
    case ContingencyScript::Kind::bus_fault:
      j["fault_bus"] = s.fault_bus;
      j["clearing_time_s"] = s.clearing_time_s;
      j["fault_pu"] = s.fault_pu;
      break;
    case ContingencyScript::Kind::none:
      break;
  }
  return j;
}

inline ContingencyScript script_from_json(const json& j) {
  ContingencyScript s;
  const std::string kind = j.at("kind").get<std::string>();
  s.t_c_s = j.at("t_c_s").get<double>();
  if (kind == "island") {
    s.kind = ContingencyScript::Kind::island;
    s.cut.removed_branches = j.at("removed_branches").get<std::vector<int>>();
    s.cut.side_a = j.at("side_a").get<std::vector<BusId>>();
    s.cut.side_b = j.at("side_b").get<std::vector<BusId>>();
  } else if (kind == "line_trip") {
    s.kind = ContingencyScript::Kind::line_trip;
    s.branch_id = j.at("branch_id").get<int>();
  } else if (kind == "generator_trip") {
    s.kind = ContingencyScript::Kind::generator_trip;
    s.generator_index = j.at("generator_index").get<int>();
  } else if (kind == "bus_fault") {
    s.kind = ContingencyScript::Kind::bus_fault;
    s.fault_bus = j.at("fault_bus").get<BusId>();
    s.clearing_time_s = j.at("clearing_time_s").get<double>();
    s.fault_pu = j.at("fault_pu").get<double>();
  } else if (kind == "none") {
    s.kind = ContingencyScript::Kind::none;
  } else {
    throw ParseError("unknown script kind: " + kind);
  }
  return s;
}

inline void save_traces_csv(const std::string& path, const std::map<BusId, AngleTrace>& traces) {
  std::ostringstream out;
  out << "time_s";
  for (const auto& [bus, tr] : traces) out << ",bus_" << bus << "_deg";
  out << "\n";
  const auto& first = traces.begin()->second;
  for (std::size_t i = 0; i < first.samples_deg.size(); ++i) {
    out << fmt_double(first.t0_s + static_cast<double>(i) / first.rate_hz, 12);
    for (const auto& [bus, tr] : traces) out << ',' << fmt_double(tr.samples_deg[i], 17);
    out << "\n";
  }
  write_text_file(path, out.str());
}

inline std::map<BusId, AngleTrace> load_traces_csv(const std::string& path, double rate_hz,
                                                   bool unwrapped) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty CSV");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "time_s") throw ParseError(path + ": bad CSV header");
  std::vector<BusId> buses;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h.rfind("bus_", 0) != 0 || h.size() < 9 || h.substr(h.size() - 4) != "_deg")
      throw ParseError(path + ": bad trace column '" + h + "'");
    buses.push_back(std::stoi(h.substr(4, h.size() - 8)));
  }
  std::map<BusId, AngleTrace> traces;
  double t0 = 0.0;
  bool first_row = true;
  std::vector<std::vector<double>> cols(buses.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) throw ParseError(path + ": ragged CSV row");
    if (first_row) {
      t0 = std::stod(fields[0]);
      first_row = false;
    }
    for (std::size_t c = 0; c < buses.size(); ++c) cols[c].push_back(std::stod(fields[c + 1]));
  }
  for (std::size_t c = 0; c < buses.size(); ++c) {
    AngleTrace tr;
    tr.bus = buses[c];
    tr.rate_hz = rate_hz;
    tr.t0_s = t0;
    tr.samples_deg = std::move(cols[c]);
    tr.unwrapped = unwrapped;
    traces[buses[c]] = std::move(tr);
  }
  return traces;
}

inline void save_dataset(const std::string& dir,
                         const std::vector<std::shared_ptr<const ScenarioRecord>>& records,
                         const json& extra_manifest = json::object()) {
  std::filesystem::create_directories(dir);
  json manifest = extra_manifest;
  int n1 = 0;
  for (const auto& r : records) n1 += r->label;
  manifest["counts"] = {{"islanding", n1}, {"non_islanding", static_cast<int>(records.size()) - n1}};
  manifest["rate_hz"] = 30.0;
  manifest["non_islanding_mix"] = "line_trip/generator_trip/bus_fault cycling equally";
  if (!records.empty()) {
    manifest["network_id"] = records.front()->network_id;
    manifest["wind_fraction"] = records.front()->wind_fraction;
  }
  json ids = json::array();
  for (const auto& r : records) ids.push_back(r->id);
  manifest["records"] = ids;
  write_json_file(dir + "/manifest.json", manifest);

  for (const auto& r : records) {
    save_traces_csv(dir + "/" + r->id + ".csv", r->traces);
    json side;
    side["id"] = r->id;
    side["label"] = r->label;
    side["t_c_s"] = r->t_c_s;
    side["network_id"] = r->network_id;
    side["wind_fraction"] = r->wind_fraction;
    side["seed"] = r->seed;
    side["script"] = script_to_json(r->script);
    write_json_file(dir + "/" + r->id + ".json", side);
  }
}

inline std::vector<std::shared_ptr<const ScenarioRecord>> load_dataset(const std::string& dir) {
  const json manifest = load_json_file(dir + "/manifest.json");
  std::vector<std::shared_ptr<const ScenarioRecord>> records;
  for (const auto& idj : manifest.at("records")) {
    const std::string id = idj.get<std::string>();
    const json side = load_json_file(dir + "/" + id + ".json");
    ScenarioRecord rec;
    rec.id = id;
    rec.label = side.at("label").get<int>();
    rec.t_c_s = side.at("t_c_s").get<double>();
    rec.network_id = side.at("network_id").get<std::string>();
    rec.wind_fraction = side.at("wind_fraction").get<double>();
    rec.seed = side.at("seed").get<std::uint64_t>();
    rec.script = script_from_json(side.at("script"));
    rec.traces = load_traces_csv(dir + "/" + id + ".csv", manifest.at("rate_hz").get<double>(), true);
    records.push_back(std::make_shared<const ScenarioRecord>(std::move(rec)));
  }
  return records;
}

}  // namespace cuspad
