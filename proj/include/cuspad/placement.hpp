#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cuspad/network.hpp"

namespace cuspad {

// Dual-use line relay placement. A device sits at one end of an edge; its
// substation is disrupted. Default coverage semantics: a device anywhere on
// an incident edge observes a vertex (the relay measures the line current and
// its own bus voltage, so the far-end voltage is derivable). The stricter
// host-end-only reading is available behind a flag.

struct PlacementProblem {
  std::string network_id;
  int n_vertices = 0;
  std::vector<BusId> vertex_bus;                // vertex index -> bus label
  std::vector<std::pair<int, int>> edges;       // (low, high) vertex indices
  std::vector<int> substation_of_vertex;        // vertex -> substation index
  std::vector<double> substation_cost;
  double dulr_cost = 0.1;
  bool strict_endpoint = false;

  // endpoint id = 2*edge + end, end 0 = low, 1 = high
  int endpoint_count() const { return static_cast<int>(edges.size()) * 2; }
  int endpoint_edge(int ep) const { return ep / 2; }
  int endpoint_end(int ep) const { return ep % 2; }
  int endpoint_vertex(int ep) const {
    const auto& e = edges[ep / 2];
    return ep % 2 == 0 ? e.first : e.second;
  }
  int endpoint_substation(int ep) const { return substation_of_vertex[endpoint_vertex(ep)]; }

  // Vertices observed by a device at endpoint ep.
  std::array<int, 2> covered_by(int ep) const {
    if (strict_endpoint) return {endpoint_vertex(ep), -1};
    const auto& e = edges[ep / 2];
    return {e.first, e.second};
  }
};

struct PlacementSolution {
  std::vector<std::pair<int, int>> selected;  // (edge id, end: 0 low / 1 high)
  std::vector<int> disrupted_substations;
  double total_cost = 0.0;
  std::vector<BusId> pmu_buses;
  bool proven_optimal = false;
  std::string mode;
};

inline PlacementProblem build_placement_problem(const NetworkModel& net,
                                                const SubstationPartition& substations,
                                                double dulr_cost, bool strict_endpoint = false) {
  PlacementProblem p;
  p.network_id = net.id;
  p.n_vertices = static_cast<int>(net.buses.size());
  p.vertex_bus = net.buses;
  p.dulr_cost = dulr_cost;
  p.strict_endpoint = strict_endpoint;
  p.substation_cost = substations.costs;
  p.substation_of_vertex.resize(p.n_vertices);
  for (int v = 0; v < p.n_vertices; ++v) {
    const int s = substations.substation_of(net.buses[v]);
    if (s < 0) throw ValidationError(net.id + ": bus " + std::to_string(net.buses[v]) + " has no substation");
    p.substation_of_vertex[v] = s;
  }
  std::vector<int> degree(p.n_vertices, 0);
  for (const auto& br : net.branches) {
    int a = net.bus_index(br.from);
    int b = net.bus_index(br.to);
    if (net.buses[a] > net.buses[b]) std::swap(a, b);
    p.edges.push_back({a, b});
    degree[a]++;
    degree[b]++;
  }
  for (int v = 0; v < p.n_vertices; ++v)
    if (degree[v] == 0)
      throw ValidationError(net.id + ": bus " + std::to_string(net.buses[v]) +
                            " has no incident edge, placement infeasible");
  return p;
}

// Cost recomputed from scratch: device cost per endpoint plus each induced
// substation disruption once.
inline double placement_cost(const PlacementProblem& p, const std::vector<std::pair<int, int>>& selected,
                             std::vector<int>* disrupted_out = nullptr) {
  std::vector<char> sub(p.substation_cost.size(), 0);
  double cost = p.dulr_cost * static_cast<double>(selected.size());
  for (const auto& [edge, end] : selected) sub[p.endpoint_substation(2 * edge + end)] = 1;
  std::vector<int> disrupted;
  for (std::size_t s = 0; s < sub.size(); ++s)
    if (sub[s]) {
      cost += p.substation_cost[s];
      disrupted.push_back(static_cast<int>(s));
    }
  if (disrupted_out) *disrupted_out = std::move(disrupted);
  return cost;
}

// Independent feasibility check of Eq.-style coverage: every vertex needs a
// selected device on some incident edge (host end only when strict).
inline bool verify_observability(const PlacementSolution& sol, const PlacementProblem& p) {
  std::vector<char> covered(p.n_vertices, 0);
  for (const auto& [edge, end] : sol.selected) {
    if (edge < 0 || edge >= static_cast<int>(p.edges.size())) return false;
    for (int v : p.covered_by(2 * edge + end))
      if (v >= 0) covered[v] = 1;
  }
  for (int v = 0; v < p.n_vertices; ++v)
    if (!covered[v]) return false;
  return true;
}

namespace detail {

inline PlacementSolution finish_solution(const PlacementProblem& p, std::vector<std::pair<int, int>> sel,
                                         const std::string& mode, bool proven) {
  PlacementSolution sol;
  std::sort(sel.begin(), sel.end());
  sol.selected = std::move(sel);
  sol.total_cost = placement_cost(p, sol.selected, &sol.disrupted_substations);
  for (const auto& [edge, end] : sol.selected) {
    const BusId b = p.vertex_bus[p.endpoint_vertex(2 * edge + end)];
    if (!std::binary_search(sol.pmu_buses.begin(), sol.pmu_buses.end(), b)) {
      sol.pmu_buses.push_back(b);
      std::sort(sol.pmu_buses.begin(), sol.pmu_buses.end());
    }
  }
  sol.proven_optimal = proven;
  sol.mode = mode;
  return sol;
}

}  // namespace detail

// Weighted set-cover heuristic: repeatedly takes the endpoint with the lowest
// marginal cost per newly covered vertex, then drops redundant picks.
inline PlacementSolution solve_placement_greedy(const PlacementProblem& p) {
  std::vector<char> covered(p.n_vertices, 0);
  std::vector<char> sub_used(p.substation_cost.size(), 0);
  int uncovered = p.n_vertices;
  std::vector<int> picked;

  while (uncovered > 0) {
    int best_ep = -1;
    double best_ratio = 0.0;
    for (int ep = 0; ep < p.endpoint_count(); ++ep) {
      int newly = 0;
      for (int v : p.covered_by(ep))
        if (v >= 0 && !covered[v]) ++newly;
      if (newly == 0) continue;
      const int s = p.endpoint_substation(ep);
      const double marginal = p.dulr_cost + (sub_used[s] ? 0.0 : p.substation_cost[s]);
      const double ratio = marginal / newly;
      if (best_ep < 0 || ratio < best_ratio - 1e-12) {
        best_ep = ep;
        best_ratio = ratio;
      }
    }
    if (best_ep < 0) throw ValidationError(p.network_id + ": greedy placement stuck (isolated vertex?)");
    picked.push_back(best_ep);
    sub_used[p.endpoint_substation(best_ep)] = 1;
    for (int v : p.covered_by(best_ep))
      if (v >= 0 && !covered[v]) {
        covered[v] = 1;
        --uncovered;
      }
  }

  // Redundancy pruning, most recent picks first.
  for (int i = static_cast<int>(picked.size()) - 1; i >= 0; --i) {
    std::vector<int> trial;
    for (int k = 0; k < static_cast<int>(picked.size()); ++k)
      if (k != i && picked[k] >= 0) trial.push_back(picked[k]);
    std::vector<char> cov(p.n_vertices, 0);
    for (int ep : trial)
      for (int v : p.covered_by(ep))
        if (v >= 0) cov[v] = 1;
    bool ok = true;
    for (int v = 0; v < p.n_vertices && ok; ++v) ok = cov[v];
    if (ok) picked[i] = -1;
  }

  std::vector<std::pair<int, int>> sel;
  for (int ep : picked)
    if (ep >= 0) sel.push_back({p.endpoint_edge(ep), p.endpoint_end(ep)});
  return detail::finish_solution(p, std::move(sel), "greedy", false);
}

struct ExactOptions {
  // Node budget for the branch-and-bound search. When exhausted the best
  // incumbent is returned with proven_optimal = false.
  std::uint64_t node_limit = 20'000'000;
};

namespace detail {

struct ExactSearch {
  const PlacementProblem& p;
  std::vector<std::vector<int>> vertex_candidates;  // vertex -> endpoint ids
  std::vector<char> covered;
  std::vector<char> banned;
  std::vector<int> sub_count;  // selections per substation
  std::vector<int> chosen;
  int uncovered = 0;
  double cost = 0.0;
  double best_cost = 0.0;
  std::vector<int> best_chosen;
  std::uint64_t nodes = 0;
  std::uint64_t node_limit = 0;
  bool exhausted = true;

  explicit ExactSearch(const PlacementProblem& prob) : p(prob) {
    vertex_candidates.resize(p.n_vertices);
    for (int ep = 0; ep < p.endpoint_count(); ++ep)
      for (int v : p.covered_by(ep))
        if (v >= 0) vertex_candidates[v].push_back(ep);
    covered.assign(p.n_vertices, 0);
    banned.assign(p.endpoint_count(), 0);
    sub_count.assign(p.substation_cost.size(), 0);
    uncovered = p.n_vertices;
  }

  double marginal(int ep) const {
    const int s = p.endpoint_substation(ep);
    return p.dulr_cost + (sub_count[s] > 0 ? 0.0 : p.substation_cost[s]);
  }

  // Admissible bound: every endpoint covers at most two vertices, and
  // substation-disjoint uncovered vertices each force a distinct disruption.
  double lower_bound() const {
    const int per_endpoint = p.strict_endpoint ? 1 : 2;
    double lb = p.dulr_cost * std::ceil(static_cast<double>(uncovered) / per_endpoint);
    std::vector<char> blocked(p.substation_cost.size(), 0);
    for (int v = 0; v < p.n_vertices; ++v) {
      if (covered[v]) continue;
      bool free_option = false;  // can be covered without a new substation
      double min_c = -1.0;
      bool overlap = false;
      for (int ep : vertex_candidates[v]) {
        if (banned[ep]) continue;
        const int s = p.endpoint_substation(ep);
        if (sub_count[s] > 0) {
          free_option = true;
          break;
        }
        if (blocked[s]) overlap = true;
        if (min_c < 0 || p.substation_cost[s] < min_c) min_c = p.substation_cost[s];
      }
      if (free_option || overlap || min_c < 0) continue;
      lb += min_c;
      for (int ep : vertex_candidates[v])
        if (!banned[ep]) blocked[p.endpoint_substation(ep)] = 1;
    }
    return lb;
  }

  void select(int ep, std::vector<int>& newly) {
    const int s = p.endpoint_substation(ep);
    if (sub_count[s]++ == 0) cost += p.substation_cost[s];
    cost += p.dulr_cost;
    for (int v : p.covered_by(ep))
      if (v >= 0 && !covered[v]) {
        covered[v] = 1;
        --uncovered;
        newly.push_back(v);
      }
    chosen.push_back(ep);
  }

  void unselect(int ep, const std::vector<int>& newly) {
    chosen.pop_back();
    for (int v : newly) {
      covered[v] = 0;
      ++uncovered;
    }
    cost -= p.dulr_cost;
    const int s = p.endpoint_substation(ep);
    if (--sub_count[s] == 0) cost -= p.substation_cost[s];
  }

  void dfs() {
    if (nodes++ > node_limit) {
      exhausted = false;
      return;
    }
    if (uncovered == 0) {
      if (cost < best_cost - 1e-12) {
        best_cost = cost;
        best_chosen = chosen;
      }
      return;
    }
    if (cost + lower_bound() >= best_cost - 1e-12) return;

    // Branch on the uncovered vertex with the fewest usable candidates.
    int branch_v = -1;
    std::size_t branch_n = 0;
    for (int v = 0; v < p.n_vertices; ++v) {
      if (covered[v]) continue;
      std::size_t cnt = 0;
      for (int ep : vertex_candidates[v])
        if (!banned[ep]) ++cnt;
      if (cnt == 0) return;  // infeasible under current bans
      if (branch_v < 0 || cnt < branch_n) {
        branch_v = v;
        branch_n = cnt;
      }
    }

    std::vector<int> cands;
    for (int ep : vertex_candidates[branch_v])
      if (!banned[ep]) cands.push_back(ep);
    std::stable_sort(cands.begin(), cands.end(),
                     [&](int a, int b) { return marginal(a) < marginal(b); });

    // Inclusion-exclusion branching: branch i selects cands[i] with all
    // earlier candidates banned, partitioning the search space.
    std::vector<int> newly;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      newly.clear();
      select(cands[i], newly);
      dfs();
      unselect(cands[i], newly);
      banned[cands[i]] = 1;
      if (!exhausted) break;
    }
    for (int ep : cands)
      if (banned[ep]) banned[ep] = 0;
  }
};

}  // namespace detail

// Branch-and-bound over endpoint selections, warm-started by the greedy
// solution. Provably optimal whenever the search space is exhausted within
// the node budget; the incumbent plus proven_optimal=false otherwise.
inline PlacementSolution solve_placement_exact(const PlacementProblem& p, const ExactOptions& opts = {}) {
  const PlacementSolution warm = solve_placement_greedy(p);
  detail::ExactSearch search(p);
  search.node_limit = opts.node_limit;
  search.best_cost = warm.total_cost + 1e-9;
  search.dfs();

  if (search.best_chosen.empty() && !warm.selected.empty())
    return detail::finish_solution(
        p, std::vector<std::pair<int, int>>(warm.selected), "exact", search.exhausted);
  std::vector<std::pair<int, int>> sel;
  for (int ep : search.best_chosen) sel.push_back({p.endpoint_edge(ep), p.endpoint_end(ep)});
  return detail::finish_solution(p, std::move(sel), "exact", search.exhausted);
}

inline PlacementSolution solve_placement(const PlacementProblem& p, const std::string& mode,
                                         const ExactOptions& opts = {}) {
  if (mode == "exact") return solve_placement_exact(p, opts);
  if (mode == "greedy") return solve_placement_greedy(p);
  throw ValidationError("unknown placement mode: " + mode);
}

inline json placement_to_json(const PlacementProblem& p, const PlacementSolution& sol) {
  json sel = json::array();
  for (const auto& [edge, end] : sol.selected) {
    const int ep = 2 * edge + end;
    sel.push_back({{"edge", edge},
                   {"end", end == 0 ? "low" : "high"},
                   {"bus", p.vertex_bus[p.endpoint_vertex(ep)]},
                   {"substation", p.endpoint_substation(ep)}});
  }
  return json{{"network", p.network_id},
              {"mode", sol.mode},
              {"selected_endpoints", sel},
              {"disrupted_substations", sol.disrupted_substations},
              {"pmu_buses", sol.pmu_buses},
              {"device_count", sol.selected.size()},
              {"total_cost", sol.total_cost},
              {"dulr_cost", p.dulr_cost},
              {"proven_optimal", sol.proven_optimal},
              {"strict_endpoint", p.strict_endpoint}};
}

}  // namespace cuspad
