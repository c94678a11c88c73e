#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "tdsr/oracle.hpp"
#include "tdsr/rng.hpp"
#include "tdsr/simulation.hpp"
#include "tdsr/topology.hpp"
#include "test_graphs.hpp"

using namespace tdsr;
using tdsr_test::fig3_graph;
using tdsr_test::fig5_graph;
using tdsr_test::path_graph;

TEST_CASE("kruskal on the 2x2 walkthrough weights") {
  const NetworkGraph g = fig5_graph();
  const auto tree = oracle::kruskal_mst(g);
  std::set<Weight> weights;
  for (LinkIndex i : tree) weights.insert(g.link(i).weight);
  CHECK(weights == std::set<Weight>{10, 11, 12});
}

TEST_CASE("kruskal keeps every link of a tree") {
  const NetworkGraph g = path_graph(6);
  CHECK(oracle::kruskal_mst(g).size() == 5);
}

TEST_CASE("brute force lca basics") {
  const NetworkGraph g = path_graph(4);
  const auto tree = oracle::kruskal_mst(g);
  const auto rooted = oracle::root_tree(g, tree, {0});
  CHECK(oracle::brute_force_lca(rooted, 0, 3) == 0);   // ancestor of
  CHECK(oracle::brute_force_lca(rooted, 2, 3) == 2);
  CHECK(oracle::brute_force_lca(rooted, 3, 3) == 3);
}

TEST_CASE("brute force lca of siblings is the parent") {
  NetworkGraph g(3);
  g.add_link(0, 1, 1);
  g.add_link(0, 2, 2);
  const auto rooted = oracle::root_tree(g, oracle::kruskal_mst(g), {0});
  CHECK(oracle::brute_force_lca(rooted, 1, 2) == 0);
}

TEST_CASE("centralized SR reproduces the defective 4x3 walkthrough") {
  const NetworkGraph g = fig3_graph();
  const SegmentationResult res = oracle::centralized_sr(g, 8);

  REQUIRE(res.subnets.size() == 4);
  REQUIRE(res.segments.size() == 3);

  // starting segment of subnet 0: the 2x2 block below switch 8
  const Segment& s0 = res.segments[0];
  CHECK(s0.subnet == 0);
  CHECK(s0.kind == SegmentKind::Starting);
  CHECK(std::set<SwitchId>(s0.switches.begin(), s0.switches.end()) ==
        std::set<SwitchId>{8, 4, 5, 9});
  CHECK(std::set<Weight>(s0.links.begin(), s0.links.end()) ==
        std::set<Weight>{9, 6, 10, 13});  // i, f, j, m

  // bridges a, c, g
  std::set<std::pair<SwitchId, SwitchId>> bridges(res.bridges.begin(),
                                                  res.bridges.end());
  CHECK(bridges == std::set<std::pair<SwitchId, SwitchId>>{
                       {0, 1}, {0, 4}, {5, 6}});
}

TEST_CASE("centralized SR on a tree builds no segments") {
  const NetworkGraph g = path_graph(4);
  const SegmentationResult res = oracle::centralized_sr(g, 0);
  CHECK(res.segments.empty());
  // every link fails its path search exactly once and ends up a bridge
  CHECK(res.bridges.size() == 3);
}

TEST_CASE("centralized SR output satisfies the construction rules") {
  for (std::uint64_t seed : {11u, 22u, 33u}) {
    Mesh m = generate_mesh(8, 8);
    assign_weights(m, {DistributionKind::Random, seed});
    inject_faults(m.graph, 15.0, seed * 7);
    const auto comps = connected_components(m.graph);
    const SegmentationResult res =
        oracle::centralized_sr(m.graph, comps.front().front());
    std::set<SwitchId> switches_seen;
    std::set<Weight> links_seen;
    for (const Segment& s : res.segments) {
      for (SwitchId v : s.switches) REQUIRE(switches_seen.insert(v).second);
      for (Weight w : s.links) REQUIRE(links_seen.insert(w).second);
    }
    for (const auto& [a, b] : res.bridges) {
      const LinkIndex li = m.graph.find_link(a, b);
      REQUIRE(li != kNoLink);
      REQUIRE_FALSE(links_seen.count(m.graph.link(li).weight));
    }
  }
}

TEST_CASE("cdg flags an unrestricted ring as deadlock prone") {
  NetworkGraph ring(4);
  ring.add_link(0, 1, 1);
  ring.add_link(1, 3, 2);
  ring.add_link(2, 3, 3);
  ring.add_link(0, 2, 4);
  CHECK_FALSE(oracle::deadlock_free(ring, {}));
  SECTION("one bidirectional restriction breaks both directed cycles") {
    std::vector<RoutingRestriction> r{{0, 1, 4}};
    CHECK(oracle::deadlock_free(ring, r));
    CHECK(oracle::all_pairs_connected(ring, r));  // the long way around exists
  }
}

TEST_CASE("cdg on a tree is acyclic and connected") {
  const NetworkGraph g = path_graph(5);
  CHECK(oracle::deadlock_free(g, {}));
  CHECK(oracle::all_pairs_connected(g, {}));
}

TEST_CASE("connectivity fails when a restriction cuts a bridge path") {
  // star: center 0, leaves 1..3; forbidding 1-0-2 turns disconnects 1 from 2
  NetworkGraph g(4);
  g.add_link(0, 1, 1);
  g.add_link(0, 2, 2);
  g.add_link(0, 3, 3);
  std::vector<RoutingRestriction> r{{0, 1, 2}};
  CHECK_FALSE(oracle::all_pairs_connected(g, r));
  CHECK(oracle::deadlock_free(g, r));
}
