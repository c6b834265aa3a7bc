#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "cuspad/io_util.hpp"

namespace cuspad {

// Static description of a test power network. Bus labels are opaque integers
// and need not be contiguous.

using BusId = int;

enum class BranchKind { line, transformer };

struct Branch {
  BusId from = 0;
  BusId to = 0;
  BranchKind kind = BranchKind::line;
  double b_pu = 0.0;  // series susceptance magnitude, per unit
};

struct Generator {
  BusId bus = 0;
  double inertia_h_s = 0.0;  // seconds; 0 only for inverter-based units
  double rated_mw = 0.0;
  bool is_inverter_based = false;
};

struct Load {
  BusId bus = 0;
  double mw = 0.0;
  double mvar = 0.0;
};

struct NetworkModel {
  std::string id;
  std::vector<BusId> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  double base_frequency_hz = 60.0;

  int bus_index(BusId b) const {
    auto it = bus_index_.find(b);
    return it == bus_index_.end() ? -1 : it->second;
  }

  void rebuild_index() {
    bus_index_.clear();
    for (std::size_t i = 0; i < buses.size(); ++i) bus_index_[buses[i]] = static_cast<int>(i);
  }

  double total_rated_mw() const {
    double s = 0.0;
    for (const auto& g : generators) s += g.rated_mw;
    return s;
  }

  double total_load_mw() const {
    double s = 0.0;
    for (const auto& l : loads) s += l.mw;
    return s;
  }

  std::size_t synchronous_count() const {
    std::size_t n = 0;
    for (const auto& g : generators)
      if (!g.is_inverter_based) ++n;
    return n;
  }

 private:
  std::map<BusId, int> bus_index_;
};

// Adjacency over bus indices; branch ids are positions in net.branches.
inline std::vector<std::vector<std::pair<int, int>>> build_adjacency(const NetworkModel& net) {
  std::vector<std::vector<std::pair<int, int>>> adj(net.buses.size());
  for (std::size_t e = 0; e < net.branches.size(); ++e) {
    const int a = net.bus_index(net.branches[e].from);
    const int b = net.bus_index(net.branches[e].to);
    adj[a].push_back({b, static_cast<int>(e)});
    adj[b].push_back({a, static_cast<int>(e)});
  }
  return adj;
}

// Connected components of the bus graph, skipping branches in `removed`
// (indexed by branch id). Returns component label per bus index.
inline std::vector<int> connected_components(const NetworkModel& net,
                                             const std::vector<bool>* removed = nullptr) {
  const std::size_t n = net.buses.size();
  auto adj = build_adjacency(net);
  std::vector<int> comp(n, -1);
  int label = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::queue<int> q;
    q.push(static_cast<int>(s));
    comp[s] = label;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (auto [v, e] : adj[u]) {
        if (removed && (*removed)[e]) continue;
        if (comp[v] < 0) {
          comp[v] = label;
          q.push(v);
        }
      }
    }
    ++label;
  }
  return comp;
}

inline bool is_connected(const NetworkModel& net) {
  if (net.buses.empty()) return true;
  auto comp = connected_components(net);
  return *std::max_element(comp.begin(), comp.end()) == 0;
}

inline void validate_network(const NetworkModel& net) {
  if (net.buses.empty()) throw ValidationError(net.id + ": no buses");
  if (net.base_frequency_hz <= 0) throw ValidationError(net.id + ": base_frequency_hz must be positive");
  std::set<BusId> seen;
  for (BusId b : net.buses)
    if (!seen.insert(b).second) throw ValidationError(net.id + ": duplicate bus label " + std::to_string(b));
  for (const auto& br : net.branches) {
    if (net.bus_index(br.from) < 0 || net.bus_index(br.to) < 0)
      throw ValidationError(net.id + ": branch references nonexistent bus " +
                            std::to_string(net.bus_index(br.from) < 0 ? br.from : br.to));
    if (br.from == br.to) throw ValidationError(net.id + ": self-loop branch at bus " + std::to_string(br.from));
    if (br.b_pu <= 0) throw ValidationError(net.id + ": branch susceptance must be positive");
  }
  for (const auto& g : net.generators) {
    if (net.bus_index(g.bus) < 0)
      throw ValidationError(net.id + ": generator references nonexistent bus " + std::to_string(g.bus));
    if (g.rated_mw <= 0) throw ValidationError(net.id + ": generator rated_mw must be positive");
    if (!g.is_inverter_based && g.inertia_h_s <= 0)
      throw ValidationError(net.id + ": synchronous generator at bus " + std::to_string(g.bus) +
                            " needs inertia_h_s > 0");
    if (g.is_inverter_based && g.inertia_h_s != 0)
      throw ValidationError(net.id + ": inverter-based generator at bus " + std::to_string(g.bus) +
                            " must have inertia_h_s = 0");
  }
  for (const auto& l : net.loads)
    if (net.bus_index(l.bus) < 0)
      throw ValidationError(net.id + ": load references nonexistent bus " + std::to_string(l.bus));
  if (!is_connected(net)) throw ValidationError(net.id + ": bus graph is not connected");
}

inline NetworkModel network_from_json(const json& j, const std::string& id) {
  NetworkModel net;
  net.id = id;
  try {
    for (const auto& b : j.at("buses")) net.buses.push_back(b.get<BusId>());
    for (const auto& br : j.at("branches")) {
      Branch x;
      x.from = br.at("from").get<BusId>();
      x.to = br.at("to").get<BusId>();
      const std::string kind = br.at("kind").get<std::string>();
      if (kind == "line")
        x.kind = BranchKind::line;
      else if (kind == "transformer")
        x.kind = BranchKind::transformer;
      else
        throw ParseError(id + ": unknown branch kind '" + kind + "'");
      x.b_pu = br.at("b_pu").get<double>();
      net.branches.push_back(x);
    }
    for (const auto& g : j.at("generators")) {
      Generator x;
      x.bus = g.at("bus").get<BusId>();
      x.inertia_h_s = g.at("inertia_h_s").get<double>();
      x.rated_mw = g.at("rated_mw").get<double>();
      x.is_inverter_based = g.at("is_inverter_based").get<bool>();
      net.generators.push_back(x);
    }
    for (const auto& l : j.at("loads")) {
      Load x;
      x.bus = l.at("bus").get<BusId>();
      x.mw = l.at("mw").get<double>();
      x.mvar = l.at("mvar").get<double>();
      net.loads.push_back(x);
    }
    net.base_frequency_hz = j.at("base_frequency_hz").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(id + ": bad network JSON: " + e.what());
  }
  net.rebuild_index();
  validate_network(net);
  return net;
}

inline NetworkModel load_network(const std::string& path) {
  return network_from_json(load_json_file(path), std::filesystem::path(path).stem().string());
}

inline json network_to_json(const NetworkModel& net) {
  json j;
  j["buses"] = net.buses;
  j["branches"] = json::array();
  for (const auto& br : net.branches)
    j["branches"].push_back({{"from", br.from},
                             {"to", br.to},
                             {"kind", br.kind == BranchKind::line ? "line" : "transformer"},
                             {"b_pu", br.b_pu}});
  j["generators"] = json::array();
  for (const auto& g : net.generators)
    j["generators"].push_back({{"bus", g.bus},
                               {"inertia_h_s", g.inertia_h_s},
                               {"rated_mw", g.rated_mw},
                               {"is_inverter_based", g.is_inverter_based}});
  j["loads"] = json::array();
  for (const auto& l : net.loads) j["loads"].push_back({{"bus", l.bus}, {"mw", l.mw}, {"mvar", l.mvar}});
  j["base_frequency_hz"] = net.base_frequency_hz;
  return j;
}

// Buses joined by transformers belong to one substation; everything else is a
// singleton. Groups keep ascending bus order, substations ordered by their
// smallest bus.
struct SubstationPartition {
  std::vector<std::vector<BusId>> groups;
  std::vector<double> costs;

  int substation_of(BusId b) const {
    for (std::size_t i = 0; i < groups.size(); ++i)
      if (std::binary_search(groups[i].begin(), groups[i].end(), b)) return static_cast<int>(i);
    return -1;
  }
};

inline SubstationPartition group_substations(const NetworkModel& net, double default_cost) {
  const std::size_t n = net.buses.size();
  std::vector<int> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& br : net.branches) {
    if (br.kind != BranchKind::transformer) continue;
    const int a = find(net.bus_index(br.from));
    const int b = find(net.bus_index(br.to));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<int, std::vector<BusId>> by_root;
  for (std::size_t i = 0; i < n; ++i) by_root[find(static_cast<int>(i))].push_back(net.buses[i]);
  SubstationPartition part;
  for (auto& [root, members] : by_root) {
    std::sort(members.begin(), members.end());
    part.groups.push_back(members);
  }
  std::sort(part.groups.begin(), part.groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  part.costs.assign(part.groups.size(), default_cost);
  return part;
}

// Convert synchronous machines to inverter-based units, largest first, until
// inverter capacity reaches `fraction` of total capacity. At least one
// synchronous machine must survive.
inline NetworkModel apply_wind_penetration(const NetworkModel& net, double fraction) {
  if (fraction < 0.0 || fraction > 1.0) throw ValidationError("wind fraction must be in [0, 1]");
  NetworkModel out = net;
  const double total = out.total_rated_mw();
  double converted = 0.0;
  for (const auto& g : out.generators)
    if (g.is_inverter_based) converted += g.rated_mw;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < out.generators.size(); ++i)
    if (!out.generators[i].is_inverter_based) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (out.generators[a].rated_mw != out.generators[b].rated_mw)
      return out.generators[a].rated_mw > out.generators[b].rated_mw;
    if (out.generators[a].bus != out.generators[b].bus) return out.generators[a].bus < out.generators[b].bus;
    return a < b;
  });

  std::size_t remaining_sync = order.size();
  for (std::size_t idx : order) {
    if (converted >= fraction * total) break;
    if (remaining_sync <= 1)
      throw ValidationError(net.id + ": wind fraction " + fmt_double(fraction) +
                            " would convert every synchronous machine");
    auto& g = out.generators[idx];
    g.is_inverter_based = true;
    g.inertia_h_s = 0.0;
    converted += g.rated_mw;
    --remaining_sync;
  }
  out.rebuild_index();
  return out;
}

}  // namespace cuspad
