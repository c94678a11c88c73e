#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>

#include "tdsr/oracle.hpp"
#include "tdsr/segment_result.hpp"
#include "tdsr/simulation.hpp"
#include "tdsr/topology.hpp"
#include "test_graphs.hpp"

using namespace tdsr;

TEST_CASE("segmentation dump round trip") {
  Mesh m = generate_mesh(4, 4);
  assign_weights(m, {DistributionKind::Horizontal, 0});
  const TdsrRun run = run_tdsr(m.graph);
  std::ostringstream os;
  write_segmentation(os, run.segmentation);
  std::istringstream is(os.str());
  const SegmentationResult back = read_segmentation(is);
  REQUIRE(back.segments.size() == run.segmentation.segments.size());
  for (std::size_t i = 0; i < back.segments.size(); ++i) {
    CHECK(back.segments[i].id == run.segmentation.segments[i].id);
    CHECK(back.segments[i].switches == run.segmentation.segments[i].switches);
    CHECK(back.segments[i].links == run.segmentation.segments[i].links);
    CHECK(back.segments[i].kind == run.segmentation.segments[i].kind);
  }
  CHECK(back.restrictions.size() == run.segmentation.restrictions.size());
}

TEST_CASE("verify_dump accepts genuine output and rejects tampering") {
  Mesh m = generate_mesh(4, 4);
  assign_weights(m, {DistributionKind::Horizontal, 0});
  const TdsrRun run = run_tdsr(m.graph);
  SECTION("clean dump passes") {
    CHECK(verify_dump(m.graph, run.segmentation).empty());
  }
  SECTION("a switch in two segments violates Rule 1") {
    SegmentationResult tampered = run.segmentation;
    REQUIRE(tampered.segments.size() >= 2);
    // graft a switch of segment 0 into segment 1
    tampered.segments[1].switches.push_back(tampered.segments[0].switches.front());
    const auto problems = verify_dump(m.graph, tampered);
    bool rule1 = false;
    for (const auto& p : problems)
      if (p.find("in two segments") != std::string::npos) rule1 = true;
    CHECK(rule1);
  }
  SECTION("dropping a restriction breaks deadlock freedom") {
    SegmentationResult tampered = run.segmentation;
    tampered.restrictions.clear();
    const auto problems = verify_dump(m.graph, tampered);
    bool cyclic = false;
    for (const auto& p : problems)
      if (p.find("cycle") != std::string::npos) cyclic = true;
    CHECK(cyclic);
  }
}

TEST_CASE("oracle output passes the structural walk checks") {
  // the centralized reference names segments differently and places no
  // restrictions, so only Rule 1 / Rule 2 / walk shape apply to it
  const NetworkGraph g = tdsr_test::fig3_graph();
  SegmentationResult res = oracle::centralized_sr(g, 8);
  const auto problems = verify_dump(g, res);
  for (const auto& p : problems) {
    CHECK(p.find("in two segments") == std::string::npos);
    CHECK(p.find("attaches outside") == std::string::npos);
    CHECK(p.find("connected walk") == std::string::npos);
    CHECK(p.find("starting switch") == std::string::npos);
  }
}
