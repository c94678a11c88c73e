#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "tdsr/engine.hpp"
#include "tdsr/error.hpp"
#include "tdsr/interval.hpp"
#include "tdsr/oracle.hpp"
#include "tdsr/segment_result.hpp"
#include "tdsr/topology.hpp"

namespace tdsr {

inline LinkIndex weight_to_link(const NetworkGraph& g, Weight w) {
  for (LinkIndex i = 0; i < g.links().size(); ++i)
    if (!g.link(i).defective && g.link(i).weight == w) return i;
  throw IoError("no healthy link with weight " + std::to_string(w));
}

/// Everything a finished three-stage run exposes for analysis.
struct TdsrRun {
  SimClock clock;
  std::vector<LinkIndex> mst_links;  // sorted link indices classified tree
  std::vector<std::optional<IntervalLabel>> labels;  // per switch
  std::vector<SwitchId> roots;       // elected root per component
  oracle::RootedTree tree;           // protocol tree oriented at the roots
  SegmentationResult segmentation;
  std::uint32_t mst_depth = 0;
  std::array<std::uint64_t, 3> messages{0, 0, 0};  // deliveries per stage
};

namespace detail {

inline void extract_segments(const NetworkGraph& g, const Engine& eng,
                             const std::vector<LinkIndex>& mst_links,
                             TdsrRun& run) {
  SegmentationResult& out = run.segmentation;
  // subnet ids in creation order (cycle, then switch id)
  std::vector<SwitchId> starters;
  for (SwitchId s = 0; s < g.switch_count(); ++s)
    if (eng.automaton(s).is_starting) starters.push_back(s);
  std::sort(starters.begin(), starters.end(), [&](SwitchId x, SwitchId y) {
    const auto &ax = eng.automaton(x), &ay = eng.automaton(y);
    if (ax.started_cycle != ay.started_cycle)
      return ax.started_cycle < ay.started_cycle;
    return x < y;
  });
  std::map<SwitchId, int> subnet_of_starter;
  for (std::size_t i = 0; i < starters.size(); ++i) {
    subnet_of_starter[starters[i]] = static_cast<int>(i);
    out.subnets.push_back(SubnetRecord{static_cast<int>(i), starters[i],
                                       eng.automaton(starters[i]).withdrawn,
                                       {}});
  }
  // subnet membership: walk each rooted tree, switching at starting switches
  std::vector<int> subnet_of(g.switch_count(), -1);
  for (SwitchId s = 0; s < g.switch_count(); ++s) {
    SwitchId v = s;
    std::vector<SwitchId> path;
    while (true) {
      if (eng.automaton(v).is_starting) break;
      TDSR_CHECK(run.tree.parent[v] != v, "no subnet root above switch ", v);
      path.push_back(v);
      v = run.tree.parent[v];
    }
    const int sn = subnet_of_starter.at(v);
    subnet_of[s] = sn;
    (void)path;
  }
  for (SwitchId s = 0; s < g.switch_count(); ++s)
    out.subnets[subnet_of[s]].switches.push_back(s);

  // bridges: marked at the child side of each START hop into unassigned land
  for (SwitchId s = 0; s < g.switch_count(); ++s) {
    const SwitchAutomaton& a = eng.automaton(s);
    const auto& adj = g.healthy_adjacency()[s];
    for (std::size_t slot = 0; slot < adj.size(); ++slot)
      if (a.bridge[slot]) {
        const Link& l = g.link(adj[slot].link);
        out.bridges.emplace_back(l.a, l.b);
      }
  }
  std::sort(out.bridges.begin(), out.bridges.end());
  out.bridges.erase(std::unique(out.bridges.begin(), out.bridges.end()),
                    out.bridges.end());

  // segments: one per internal (non-tree healthy) link
  std::set<LinkIndex> tree_set(mst_links.begin(), mst_links.end());
  auto slot_of = [&](SwitchId at, LinkIndex li) {
    const auto& adj = g.healthy_adjacency()[at];
    for (std::size_t slot = 0; slot < adj.size(); ++slot)
      if (adj[slot].link == li) return slot;
    throw ProtocolError("link not adjacent");
  };
  struct SideInfo {
    std::vector<SwitchId> chain;  // endpoint first, climbing toward the area
    std::uint32_t wave = 0;
    std::optional<SwitchId> subnet_root;
  };
  auto resolve_side = [&](SwitchId endpoint, LinkIndex li) {
    SideInfo info;
    const Weight w = g.link(li).weight;
    const SwitchAutomaton& a = eng.automaton(endpoint);
    if (a.chosen && *a.chosen == w && !a.is_starting) {
      SwitchId v = endpoint;
      while (true) {
        const SwitchAutomaton& cur = eng.automaton(v);
        if (!(cur.chosen && *cur.chosen == w) || cur.is_starting) break;
        TDSR_CHECK(cur.uplink_joined, "chain switch ", v, " without joined uplink");
        TDSR_CHECK(info.chain.empty() || cur.joined_wave == info.wave,
                   "chain wave mismatch at ", v);
        info.chain.push_back(v);
        info.wave = cur.joined_wave;
        info.subnet_root = cur.subnet_root;
        TDSR_CHECK(run.tree.parent[v] != v, "segment chain ran past root at ", v);
        v = run.tree.parent[v];
      }
    } else {
      const std::size_t slot = slot_of(endpoint, li);
      TDSR_CHECK(a.side[slot] != SwitchAutomaton::Side::Open,
                 "internal link ", w, " unresolved at switch ", endpoint);
      info.wave = a.side_wave[slot];
      info.subnet_root = a.side_subnet[slot];
    }
    return info;
  };

  std::vector<Segment> segments;
  for (LinkIndex li = 0; li < g.links().size(); ++li) {
    const Link& l = g.link(li);
    if (l.defective || tree_set.count(li)) continue;
    const Weight w = l.weight;
    SideInfo lo = resolve_side(std::min(l.a, l.b), li);
    SideInfo hi = resolve_side(std::max(l.a, l.b), li);
    TDSR_CHECK(lo.subnet_root.has_value() || hi.subnet_root.has_value(),
               "segment ", w, " with no subnet");
    if (lo.subnet_root && hi.subnet_root)
      TDSR_CHECK(*lo.subnet_root == *hi.subnet_root,
                 "segment ", w, " spans subnets");
    const SwitchId sroot = lo.subnet_root ? *lo.subnet_root : *hi.subnet_root;
    Segment seg;
    seg.id = w;
    seg.subnet = subnet_of_starter.at(sroot);
    seg.expansion = std::max(lo.wave, hi.wave);
    const bool starting =
        eng.automaton(sroot).chosen && *eng.automaton(sroot).chosen == w;
    seg.kind = starting ? SegmentKind::Starting
               : (lo.chain.empty() && hi.chain.empty()) ? SegmentKind::Unitary
                                                        : SegmentKind::Regular;
    // switches run from the area boundary down the lower-id side, across the
    // internal link, then up the other side; links likewise
    if (starting) seg.switches.push_back(sroot);
    for (auto it = lo.chain.rbegin(); it != lo.chain.rend(); ++it)
      seg.switches.push_back(*it);
    for (SwitchId v : hi.chain) seg.switches.push_back(v);
    for (auto it = lo.chain.rbegin(); it != lo.chain.rend(); ++it)
      seg.links.push_back(g.link(run.tree.parent_link[*it]).weight);
    seg.links.push_back(w);
    for (SwitchId v : hi.chain)
      seg.links.push_back(g.link(run.tree.parent_link[v]).weight);
    segments.push_back(std::move(seg));
  }
  std::sort(segments.begin(), segments.end(), [](const Segment& x, const Segment& y) {
    if (x.subnet != y.subnet) return x.subnet < y.subnet;
    if (x.expansion != y.expansion) return x.expansion < y.expansion;
    return x.id < y.id;
  });
  out.segments = std::move(segments);

  // expansion records: segments per (subnet, wave) plus explored distances
  std::map<std::pair<int, std::uint32_t>, ExpansionRecord> exp;
  for (const Segment& s : out.segments) {
    ExpansionRecord& e = exp[{s.subnet, s.expansion}];
    e.subnet = s.subnet;
    e.index = s.expansion;
    e.segments.push_back(s.id);
  }
  for (SwitchId s = 0; s < g.switch_count(); ++s) {
    for (const auto& [key, hops] : eng.automaton(s).explored) {
      const auto it = subnet_of_starter.find(key.first);
      TDSR_CHECK(it != subnet_of_starter.end(), "explored hops for non-subnet");
      ExpansionRecord& e = exp[{it->second, key.second}];
      e.subnet = it->second;
      e.index = key.second;
      e.longest_path = std::max(e.longest_path, hops);
    }
  }
  for (auto& [key, rec] : exp) out.expansions.push_back(rec);
}

/// One bidirectional restriction per segment between the triggering internal
/// link and the parent tree link of one of its endpoints.
///
/// Preferred placement: an endpoint that joined the segment itself (its
/// parent link is the next segment link), so the forbidden turn cuts every
/// end-to-end traversal of the segment, including full ring rotations.
/// Placing at the lower-id endpoint unconditionally leaves a hole: when a
/// ring segment hangs off a cut switch and the internal link touches that
/// switch, traffic can enter and leave the ring there without crossing the
/// anchor's turn pair, and the dependency cycle survives. Unitary segments
/// have no interior and fall back to the fundamental-cycle pair at the
/// lower-id endpoint.
inline void place_restrictions(const NetworkGraph& g, TdsrRun& run) {
  for (const Segment& seg : run.segmentation.segments) {
    const LinkIndex li = weight_to_link(g, seg.id);
    const Link& l = g.link(li);
    RoutingRestriction r;
    r.link1 = seg.id;
    std::optional<SwitchId> interior;
    for (SwitchId e : {std::min(l.a, l.b), std::max(l.a, l.b)}) {
      const bool in_segment =
          std::find(seg.switches.begin(), seg.switches.end(), e) !=
          seg.switches.end();
      if (!in_segment || run.tree.parent[e] == e) continue;
      const Weight up = g.link(run.tree.parent_link[e]).weight;
      if (std::find(seg.links.begin(), seg.links.end(), up) != seg.links.end()) {
        interior = e;
        break;
      }
    }
    if (interior) {
      r.at = *interior;
      r.link2 = g.link(run.tree.parent_link[*interior]).weight;
    } else {
      // unitary segment: no interior switch exists, and no single turn pair
      // at an endpoint can stop traffic that enters and leaves through other
      // links. The degenerate pair (link with itself) forbids every turn
      // through the link; it stays usable for the adjacent first/last hop.
      r.at = std::min(l.a, l.b);
      r.link2 = seg.id;
    }
    run.segmentation.restrictions.push_back(r);
  }
}

}  // namespace detail

struct RunOptions {
  std::ostream* trace = nullptr;
  std::uint64_t max_cycles = 0;  // 0 = engine default (64 * N^2)
};

/// Runs all three TDSR stages on the graph's healthy part and extracts the
/// tree, labels, segmentation, restrictions and per-stage accounting.
inline TdsrRun run_tdsr(const NetworkGraph& g, const RunOptions& opts = {}) {
  TDSR_CHECK(g.weights_unique_among_healthy(),
             "TDSR requires unique weights among healthy links");
  Engine eng(g, opts.trace);
  TdsrRun run;
  run.clock = eng.run_until_quiescent(
      opts.max_cycles ? opts.max_cycles : Engine::default_max_cycles(g));
  run.messages = eng.deliveries_per_stage();

  // link classification agreement and the tree-link set
  const auto& adj = g.healthy_adjacency();
  for (LinkIndex li = 0; li < g.links().size(); ++li) {
    if (g.link(li).defective) continue;
    const Link& l = g.link(li);
    auto class_at = [&](SwitchId v) {
      for (std::size_t slot = 0; slot < adj[v].size(); ++slot)
        if (adj[v][slot].link == li) return eng.automaton(v).link_class[slot];
      throw ProtocolError("link missing from adjacency");
    };
    const LinkClass ca = class_at(l.a), cb = class_at(l.b);
    TDSR_CHECK(ca == cb, "endpoints disagree on link ", l.weight);
    TDSR_CHECK(ca != LinkClass::External, "link ", l.weight, " left external");
    if (ca == LinkClass::Tree) run.mst_links.push_back(li);
  }

  // labels, roots, protocol tree
  run.labels.resize(g.switch_count());
  for (SwitchId s = 0; s < g.switch_count(); ++s) {
    const SwitchAutomaton& a = eng.automaton(s);
    TDSR_CHECK(a.mst_complete && a.label_complete, "switch ", s, " incomplete");
    run.labels[s] = a.label;
  }
  for (const auto& comp : connected_components(g)) {
    const SwitchId r = eng.automaton(comp.front()).root;
    for (SwitchId v : comp)
      TDSR_CHECK(eng.automaton(v).root == r, "root disagreement in component");
    run.roots.push_back(r);
  }
  run.tree = oracle::root_tree(g, run.mst_links, run.roots);
  for (SwitchId s = 0; s < g.switch_count(); ++s) {
    const SwitchAutomaton& a = eng.automaton(s);
    if (a.label_parent) {
      TDSR_CHECK(run.tree.parent[s] == a.slot_neighbor(*a.label_parent),
                 "protocol parent disagrees with tree orientation at ", s);
    } else {
      TDSR_CHECK(run.tree.parent[s] == s, "missing parent at non-root ", s);
    }
  }
  run.mst_depth = run.tree.max_depth();

  detail::extract_segments(g, eng, run.mst_links, run);
  detail::place_restrictions(g, run);
  return run;
}

// ---------------------------------------------------------------------------
// Oracle verification (the acceptance-gate checks)
// ---------------------------------------------------------------------------

/// Structural checks on a segmentation against the graph and its MST:
/// Rule 1 disjointness, Rule 2 attachment in commit order, internal-link
/// coverage, bridge sanity, CDG acyclicity and reachability. Works on both
/// extracted runs and parsed dumps (where subnet records may be absent).
inline std::vector<std::string> verify_segmentation(
    const NetworkGraph& g, const SegmentationResult& res,
    const std::vector<LinkIndex>& tree_links) {
  std::vector<std::string> bad;
  auto fail = [&](std::string msg) { bad.push_back(std::move(msg)); };

  // Rule 1: disjoint switch and link sets
  std::set<SwitchId> seen_switches;
  std::set<Weight> seen_links;
  for (const Segment& s : res.segments) {
    for (SwitchId v : s.switches)
      if (!seen_switches.insert(v).second)
        fail("switch " + std::to_string(v) + " in two segments");
    for (Weight w : s.links)
      if (!seen_links.insert(w).second)
        fail("link " + std::to_string(w) + " in two segments");
  }

  // coverage: segment ids are exactly the internal links; bridges are
  // segment-free
  std::set<Weight> internal_weights;
  std::set<LinkIndex> tree_set(tree_links.begin(), tree_links.end());
  for (LinkIndex li = 0; li < g.links().size(); ++li)
    if (!g.link(li).defective && !tree_set.count(li))
      internal_weights.insert(g.link(li).weight);
  std::set<Weight> segment_ids;
  for (const Segment& s : res.segments) segment_ids.insert(s.id);
  if (segment_ids != internal_weights)
    fail("segments do not cover the internal links exactly");
  for (const auto& [a, b] : res.bridges) {
    const LinkIndex li = g.find_link(a, b);
    if (li == kNoLink) { fail("bridge references unknown link"); continue; }
    if (seen_links.count(g.link(li).weight)) fail("bridge link inside a segment");
  }

  // starting switch per subnet: recorded, or the head of its starting segment
  std::map<int, SwitchId> subnet_start;
  for (const SubnetRecord& sn : res.subnets)
    subnet_start[sn.id] = sn.starting_switch;
  for (const Segment& s : res.segments)
    if (s.kind == SegmentKind::Starting && !subnet_start.count(s.subnet)) {
      if (s.switches.empty()) fail("starting segment without switches");
      else subnet_start[s.subnet] = s.switches.front();
    }

  // Rule 2: in commit order, non-starting segments attach at both ends to
  // already-constructed switches of their subnet
  std::map<int, std::set<SwitchId>> constructed;
  for (const auto& [id, start] : subnet_start) constructed[id] = {start};
  for (const Segment& s : res.segments) {
    if (!subnet_start.count(s.subnet)) {
      fail("subnet " + std::to_string(s.subnet) + " has no starting switch");
      continue;
    }
    auto& area = constructed[s.subnet];
    std::vector<SwitchId> attach;
    bool walk_ok = true;
    if (s.kind == SegmentKind::Unitary) {
      if (s.links.size() != 1 || !s.switches.empty()) {
        fail("malformed unitary segment " + std::to_string(s.id));
        walk_ok = false;
      } else {
        const Link& l = g.link(weight_to_link(g, s.links[0]));
        attach = {l.a, l.b};
      }
    } else {
      std::vector<SwitchId> path = s.switches;
      if (s.kind == SegmentKind::Starting) {
        if (path.empty() || path.front() != subnet_start[s.subnet]) {
          fail("starting segment does not begin at its starting switch");
          walk_ok = false;
        } else {
          path.erase(path.begin());
        }
      }
      if (walk_ok && s.links.size() != path.size() + 1) {
        fail("segment " + std::to_string(s.id) + " link/switch count mismatch");
        walk_ok = false;
      }
      if (walk_ok) {
        for (std::size_t i = 0; i + 1 < s.links.size(); ++i) {
          const Link& l1 = g.link(weight_to_link(g, s.links[i]));
          const Link& l2 = g.link(weight_to_link(g, s.links[i + 1]));
          const SwitchId mid = path[i];
          if (!l1.touches(mid) || !l2.touches(mid))
            fail("segment " + std::to_string(s.id) + " is not a connected walk");
        }
        const Link& first = g.link(weight_to_link(g, s.links.front()));
        const Link& last = g.link(weight_to_link(g, s.links.back()));
        attach.push_back(path.empty() ? first.a : first.other(path.front()));
        if (path.empty()) attach.push_back(first.b);
        else attach.push_back(last.other(path.back()));
      }
    }
    if (!walk_ok) continue;
    if (s.kind == SegmentKind::Starting) {
      for (SwitchId a : attach)
        if (a != subnet_start[s.subnet])
          fail("starting segment of subnet " + std::to_string(s.subnet) +
               " is not a cycle through its starting switch");
    } else {
      for (SwitchId a : attach)
        if (!area.count(a))
          fail("segment " + std::to_string(s.id) +
               " attaches outside the constructed area");
    }
    for (SwitchId v : s.switches) area.insert(v);
  }

  // deadlock freedom and turn-restricted connectivity
  oracle::ChannelDependencyGraph cdg(g, res.restrictions);
  if (!cdg.acyclic()) fail("channel dependency graph has a cycle");
  if (!cdg.all_pairs_connected()) fail("turn restrictions break connectivity");

  if (res.restrictions.size() != res.segments.size())
    fail("restriction count differs from segment count");
  return bad;
}

inline std::vector<std::string> verify_run(const NetworkGraph& g, const TdsrRun& run) {
  std::vector<std::string> bad;
  auto fail = [&](std::string msg) { bad.push_back(std::move(msg)); };

  // distributed tree equals the Kruskal forest
  if (run.mst_links != oracle::kruskal_mst(g)) fail("MST differs from Kruskal oracle");

  // labels: valid pre-order per component, containment == ancestry
  for (const auto& comp : connected_components(g)) {
    std::vector<std::uint32_t> lowers;
    for (SwitchId v : comp) {
      if (!run.labels[v]) { fail("missing label"); continue; }
      lowers.push_back(run.labels[v]->a);
      if (run.labels[v]->a > run.labels[v]->b) fail("label with a > b");
    }
    std::sort(lowers.begin(), lowers.end());
    for (std::uint32_t i = 0; i < lowers.size(); ++i)
      if (lowers[i] != i) {
        fail("labels are not a permutation of 0..n-1");
        break;
      }
    for (SwitchId u : comp)
      for (SwitchId v : comp) {
        if (u == v) continue;
        const bool by_label = is_ancestor(*run.labels[u], *run.labels[v]);
        const bool by_walk = run.tree.is_strict_ancestor(u, v);
        if (by_label != by_walk)
          fail("ancestry mismatch for pair " + std::to_string(u) + "," +
               std::to_string(v));
      }
  }

  const auto seg_bad = verify_segmentation(g, run.segmentation, run.mst_links);
  bad.insert(bad.end(), seg_bad.begin(), seg_bad.end());
  return bad;
}

/// Verification entry for a parsed dump: the tree is recomputed with the
/// Kruskal oracle (the protocol tree is required to coincide with it).
inline std::vector<std::string> verify_dump(const NetworkGraph& g,
                                            const SegmentationResult& res) {
  return verify_segmentation(g, res, oracle::kruskal_mst(g));
}

}  // namespace tdsr
