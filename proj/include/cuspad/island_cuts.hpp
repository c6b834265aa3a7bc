#pragma once

#include <algorithm>
#include <functional>
#include <set>
#include <vector>

#include "cuspad/network.hpp"

namespace cuspad {

// A set of removed line branches that splits the grid into exactly two
// connected parts, each holding at least one generator.
struct IslandCut {
  std::vector<int> removed_branches;  // branch ids, ascending
  std::vector<BusId> side_a;          // side containing the first listed bus
  std::vector<BusId> side_b;
};

namespace detail {

// Evaluates one removal set: fills the cut sides when the result is exactly
// two components with a generator on each side.
inline bool try_cut(const NetworkModel& net, const std::vector<int>& branch_ids,
                    const std::vector<bool>& removed, IslandCut& out) {
  auto comp = connected_components(net, &removed);
  const int ncomp = *std::max_element(comp.begin(), comp.end()) + 1;
  if (ncomp != 2) return false;
  int gen_per_comp[2] = {0, 0};
  for (const auto& g : net.generators) gen_per_comp[comp[net.bus_index(g.bus)]]++;
  if (gen_per_comp[0] == 0 || gen_per_comp[1] == 0) return false;
  out.removed_branches = branch_ids;
  out.side_a.clear();
  out.side_b.clear();
  for (std::size_t i = 0; i < net.buses.size(); ++i)
    (comp[i] == comp[0] ? out.side_a : out.side_b).push_back(net.buses[i]);
  return true;
}

// Grows a connected region from a seed bus, at each step absorbing the
// neighbor that keeps the line boundary smallest. Every intermediate region
// whose boundary fits the budget is a candidate cut. Deterministic: ties
// break toward the lowest bus index.
inline void grow_region_cuts(const NetworkModel& net,
                             const std::vector<std::vector<std::pair<int, int>>>& adj, int seed,
                             int max_branches, std::set<std::vector<int>>& seen,
                             std::vector<IslandCut>& out, std::size_t max_cuts) {
  const std::size_t n = net.buses.size();
  std::vector<char> in_region(n, 0);
  in_region[seed] = 1;
  std::size_t region_size = 1;

  auto boundary_lines = [&]() {
    std::vector<int> lines;
    bool crosses_transformer = false;
    for (std::size_t e = 0; e < net.branches.size(); ++e) {
      const int a = net.bus_index(net.branches[e].from);
      const int b = net.bus_index(net.branches[e].to);
      if (in_region[a] != in_region[b]) {
        if (net.branches[e].kind != BranchKind::line) crosses_transformer = true;
        lines.push_back(static_cast<int>(e));
      }
    }
    if (crosses_transformer) lines.clear();  // transformers cannot be removed
    return lines;
  };

  std::vector<bool> removed(net.branches.size(), false);
  std::size_t boundary_count = adj[seed].size();
  while (region_size < n / 2 + 1 && out.size() < max_cuts) {
    const auto lines = boundary_lines();
    if (!lines.empty() && static_cast<int>(lines.size()) <= max_branches) {
      auto key = lines;
      if (seen.insert(key).second) {
        for (int e : lines) removed[e] = true;
        IslandCut cut;
        if (try_cut(net, lines, removed, cut)) out.push_back(std::move(cut));
        for (int e : lines) removed[e] = false;
      }
    }
    // absorb the neighbor that minimizes the next boundary size
    int best_bus = -1;
    std::size_t best_boundary = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_region[v]) continue;
      std::size_t to_region = 0;
      for (auto [u, e] : adj[v]) to_region += in_region[u] ? 1 : 0;
      if (to_region == 0) continue;
      const std::size_t next_boundary = boundary_count - to_region + (adj[v].size() - to_region);
      if (best_bus < 0 || next_boundary < best_boundary) {
        best_bus = static_cast<int>(v);
        best_boundary = next_boundary;
      }
    }
    if (best_bus < 0) break;
    in_region[best_bus] = 1;
    boundary_count = best_boundary;
    ++region_size;
  }
}

}  // namespace detail

// Deterministic island-cut search. Small removal sets come from exhaustive
// subset enumeration; larger regional islands come from seeded region
// growth (whole areas whose line boundary fits the budget). The result is
// sorted by removal-set size then lexicographic branch ids and capped at
// max_cuts.
inline std::vector<IslandCut> enumerate_island_cuts(const NetworkModel& net, int max_branches,
                                                    std::size_t max_cuts) {
  max_branches = std::min(max_branches, 5);
  std::vector<int> lines;
  for (std::size_t e = 0; e < net.branches.size(); ++e)
    if (net.branches[e].kind == BranchKind::line) lines.push_back(static_cast<int>(e));

  std::vector<IslandCut> cuts;
  std::set<std::vector<int>> seen;
  std::vector<bool> removed(net.branches.size(), false);
  std::vector<int> chosen;

  // exhaustive over sizes 1 and 2
  const int exhaustive_max = std::min(max_branches, 2);
  for (int k = 1; k <= exhaustive_max && cuts.size() < max_cuts; ++k) {
    std::function<void(std::size_t, int)> rec = [&](std::size_t start, int depth) {
      if (cuts.size() >= max_cuts) return;
      if (depth == k) {
        IslandCut cut;
        if (detail::try_cut(net, chosen, removed, cut) && seen.insert(chosen).second)
          cuts.push_back(std::move(cut));
        return;
      }
      for (std::size_t i = start; i + (k - depth) <= lines.size(); ++i) {
        if (cuts.size() >= max_cuts) return;
        const int e = lines[i];
        removed[e] = true;
        chosen.push_back(e);
        rec(i + 1, depth + 1);
        chosen.pop_back();
        removed[e] = false;
      }
    };
    rec(0, 0);
  }

  // regional islands up to the full branch budget
  if (max_branches >= 1) {
    const auto adj = build_adjacency(net);
    for (std::size_t seed = 0; seed < net.buses.size() && cuts.size() < max_cuts; ++seed)
      detail::grow_region_cuts(net, adj, static_cast<int>(seed), max_branches, seen, cuts, max_cuts);
  }

  std::sort(cuts.begin(), cuts.end(), [](const IslandCut& a, const IslandCut& b) {
    if (a.removed_branches.size() != b.removed_branches.size())
      return a.removed_branches.size() < b.removed_branches.size();
    return a.removed_branches < b.removed_branches;
  });
  if (cuts.size() > max_cuts) cuts.resize(max_cuts);
  return cuts;
}

}  // namespace cuspad
