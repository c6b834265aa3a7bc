#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "cuspad/network.hpp"
#include "cuspad/rng.hpp"

using namespace cuspad;

namespace {

NetworkModel tiny_net(std::vector<Branch> branches, std::vector<BusId> buses,
                      std::vector<Generator> gens, std::vector<Load> loads = {}) {
  NetworkModel net;
  net.id = "tiny";
  net.buses = std::move(buses);
  net.branches = std::move(branches);
  net.generators = std::move(gens);
  net.loads = std::move(loads);
  net.rebuild_index();
  return net;
}

}  // namespace

TEST_CASE("bundled 18-bus network loads and validates") {
  const auto net = load_network(std::string(CUSPAD_DATA_DIR) + "/net18.json");
  REQUIRE(net.buses.size() == 18);
  REQUIRE(is_connected(net));
  REQUIRE(net.generators.size() >= 2);
  for (BusId b : {1, 11, 14, 23, 31}) REQUIRE(net.bus_index(b) >= 0);
  // labels are intentionally non-contiguous
  REQUIRE(net.bus_index(31) >= 0);
  REQUIRE(net.bus_index(13) < 0);
}

TEST_CASE("bundled 118-bus network matches the standard counts") {
  const auto net = load_network(std::string(CUSPAD_DATA_DIR) + "/net118.json");
  REQUIRE(net.buses.size() == 118);
  REQUIRE(net.branches.size() == 186);
  REQUIRE(is_connected(net));
  std::size_t transformers = 0;
  for (const auto& br : net.branches) transformers += br.kind == BranchKind::transformer;
  REQUIRE(transformers == 9);
}

TEST_CASE("branch to a nonexistent bus is a validation error") {
  json j = network_to_json(load_network(std::string(CUSPAD_DATA_DIR) + "/net18.json"));
  j["branches"].push_back({{"from", 1}, {"to", 999}, {"kind", "line"}, {"b_pu", 3.0}});
  REQUIRE_THROWS_AS(network_from_json(j, "bad"), ValidationError);
}

TEST_CASE("malformed JSON is a parse error") {
  const auto path = std::filesystem::temp_directory_path() / "cuspad_bad_net.json";
  write_text_file(path.string(), "{ not json");
  REQUIRE_THROWS_AS(load_network(path.string()), ParseError);
}

TEST_CASE("disconnected graph is rejected") {
  auto net = tiny_net({{1, 2, BranchKind::line, 5.0}}, {1, 2, 3},
                      {{1, 3.0, 100.0, false}});
  REQUIRE_THROWS_AS(validate_network(net), ValidationError);
}

TEST_CASE("substation grouping follows transformer components") {
  SECTION("no transformers: every bus is a singleton") {
    auto net = tiny_net({{1, 2, BranchKind::line, 5.0}, {2, 3, BranchKind::line, 5.0}}, {1, 2, 3},
                        {{1, 3.0, 100.0, false}});
    const auto part = group_substations(net, 1.5);
    REQUIRE(part.groups.size() == 3);
    for (double c : part.costs) REQUIRE(c == 1.5);
  }
  SECTION("one transformer merges its two buses") {
    auto net = tiny_net({{4, 5, BranchKind::transformer, 10.0}, {3, 4, BranchKind::line, 5.0}},
                        {3, 4, 5}, {{3, 3.0, 100.0, false}});
    const auto part = group_substations(net, 1.0);
    REQUIRE(part.groups.size() == 2);
    REQUIRE(part.substation_of(4) == part.substation_of(5));
    REQUIRE(part.substation_of(3) != part.substation_of(4));
  }
  SECTION("transformer chains are transitive") {
    auto net = tiny_net({{1, 2, BranchKind::transformer, 10.0}, {2, 3, BranchKind::transformer, 10.0}},
                        {1, 2, 3}, {{1, 3.0, 100.0, false}});
    const auto part = group_substations(net, 1.0);
    REQUIRE(part.groups.size() == 1);
    REQUIRE(part.groups[0] == std::vector<BusId>{1, 2, 3});
  }
}

TEST_CASE("substation grouping is a partition on random networks") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(10));
    std::vector<BusId> buses;
    for (int i = 0; i < n; ++i) buses.push_back(10 * i + 1);
    std::vector<Branch> branches;
    for (int i = 1; i < n; ++i) {
      const BusId parent = buses[rng.below(i)];
      const bool xf = rng.uniform01() < 0.4;
      branches.push_back({parent, buses[i], xf ? BranchKind::transformer : BranchKind::line, 5.0});
    }
    auto net = tiny_net(branches, buses, {{buses[0], 3.0, 100.0, false}});
    const auto part = group_substations(net, 1.0);
    std::set<BusId> seen;
    for (const auto& g : part.groups)
      for (BusId b : g) REQUIRE(seen.insert(b).second);
    REQUIRE(seen.size() == buses.size());
    // transformer-joined buses always share a group
    for (const auto& br : branches)
      if (br.kind == BranchKind::transformer)
        REQUIRE(part.substation_of(br.from) == part.substation_of(br.to));
  }
}

TEST_CASE("wind penetration conversion") {
  const auto net18 = load_network(std::string(CUSPAD_DATA_DIR) + "/net18.json");
  SECTION("fraction zero is the identity") {
    const auto out = apply_wind_penetration(net18, 0.0);
    REQUIRE(network_to_json(out) == network_to_json(net18));
  }
  SECTION("two equal machines at one half converts exactly one") {
    auto net = tiny_net({{1, 2, BranchKind::line, 5.0}}, {1, 2},
                        {{1, 3.0, 100.0, false}, {2, 3.0, 100.0, false}});
    const auto out = apply_wind_penetration(net, 0.5);
    int converted = 0;
    for (const auto& g : out.generators) converted += g.is_inverter_based;
    REQUIRE(converted == 1);
    REQUIRE(out.generators[0].is_inverter_based);  // bus order breaks the tie
  }
  SECTION("capacity ledger on the 118-bus network") {
    const auto net = load_network(std::string(CUSPAD_DATA_DIR) + "/net118.json");
    const double total = net.total_rated_mw();
    double largest = 0.0;
    for (const auto& g : net.generators) largest = std::max(largest, g.rated_mw);
    const auto out = apply_wind_penetration(net, 0.3);
    double converted = 0.0;
    for (const auto& g : out.generators)
      if (g.is_inverter_based) converted += g.rated_mw;
    REQUIRE(converted >= 0.3 * total);
    REQUIRE(converted <= 0.3 * total + largest);
    REQUIRE(out.total_rated_mw() == total);
    REQUIRE(out.buses == net.buses);
    REQUIRE(out.branches.size() == net.branches.size());
  }
  SECTION("converting every machine is infeasible") {
    auto net = tiny_net({{1, 2, BranchKind::line, 5.0}}, {1, 2}, {{1, 3.0, 100.0, false}});
    REQUIRE_THROWS_AS(apply_wind_penetration(net, 1.0), ValidationError);
  }
}
