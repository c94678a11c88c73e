#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "tdsr/error.hpp"
#include "tdsr/segment_result.hpp"
#include "tdsr/topology.hpp"

namespace tdsr {
namespace oracle {

// ---------------------------------------------------------------------------
// Kruskal MST (per component; weights must be unique among healthy links)
// ---------------------------------------------------------------------------

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Link indices of the unique minimum spanning forest over healthy links.
inline std::vector<LinkIndex> kruskal_mst(const NetworkGraph& g) {
  TDSR_CHECK(g.weights_unique_among_healthy(), "kruskal requires unique weights");
  std::vector<LinkIndex> order;
  for (LinkIndex i = 0; i < g.links().size(); ++i)
    if (!g.link(i).defective) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](LinkIndex x, LinkIndex y) {
    return g.link(x).weight < g.link(y).weight;
  });
  UnionFind uf(g.switch_count());
  std::vector<LinkIndex> tree;
  for (LinkIndex i : order)
    if (uf.unite(g.link(i).a, g.link(i).b)) tree.push_back(i);
  std::sort(tree.begin(), tree.end());
  return tree;
}

// ---------------------------------------------------------------------------
// Rooted-tree ancestry (label-independent ground truth)
// ---------------------------------------------------------------------------

/// Parent/depth arrays for a tree given by link indices, rooted per component
/// at the given roots. Switches outside any component keep parent = themselves.
struct RootedTree {
  std::vector<SwitchId> parent;      // parent[v] == v at roots / isolated
  std::vector<LinkIndex> parent_link;  // kNoLink at roots
  std::vector<std::uint32_t> depth;

  bool is_strict_ancestor(SwitchId anc, SwitchId v) const {
    if (anc == v) return false;
    while (parent[v] != v) {
      v = parent[v];
      if (v == anc) return true;
    }
    return false;
  }

  /// Deepest common switch of the two root paths; endpoints must share a tree.
  SwitchId lca(SwitchId u, SwitchId v) const {
    while (depth[u] > depth[v]) u = parent[u];
    while (depth[v] > depth[u]) v = parent[v];
    while (u != v) {
      TDSR_CHECK(parent[u] != u || parent[v] != v, "lca of disconnected switches");
      u = parent[u];
      v = parent[v];
    }
    return u;
  }

  std::uint32_t max_depth() const {
    std::uint32_t m = 0;
    for (std::uint32_t d : depth) m = std::max(m, d);
    return m;
  }
};

inline RootedTree root_tree(const NetworkGraph& g,
                            const std::vector<LinkIndex>& tree_links,
                            const std::vector<SwitchId>& roots) {
  RootedTree t;
  t.parent.resize(g.switch_count());
  std::iota(t.parent.begin(), t.parent.end(), 0);
  t.parent_link.assign(g.switch_count(), kNoLink);
  t.depth.assign(g.switch_count(), 0);
  std::vector<std::vector<std::pair<SwitchId, LinkIndex>>> adj(g.switch_count());
  for (LinkIndex i : tree_links) {
    const Link& l = g.link(i);
    adj[l.a].push_back({l.b, i});
    adj[l.b].push_back({l.a, i});
  }
  std::vector<bool> seen(g.switch_count(), false);
  for (SwitchId r : roots) {
    TDSR_CHECK(!seen[r], "duplicate root ", r);
    seen[r] = true;
    std::deque<SwitchId> q{r};
    while (!q.empty()) {
      SwitchId v = q.front();
      q.pop_front();
      for (const auto& [nbr, link] : adj[v]) {
        if (seen[nbr]) continue;
        seen[nbr] = true;
        t.parent[nbr] = v;
        t.parent_link[nbr] = link;
        t.depth[nbr] = t.depth[v] + 1;
        q.push_back(nbr);
      }
    }
  }
  return t;
}

/// Brute-force LCA by walking both root paths (Definition-10 ground truth).
inline SwitchId brute_force_lca(const RootedTree& t, SwitchId u, SwitchId v) {
  return t.lca(u, v);
}

// ---------------------------------------------------------------------------
// Centralized Segment-based Routing (Appendix A, Algorithm 1)
// ---------------------------------------------------------------------------

namespace detail {

struct SrState {
  const NetworkGraph* g = nullptr;
  std::vector<bool> link_used;     // in a segment or marked bridge
  std::vector<bool> switch_used;   // belongs to some subnet
  std::vector<int> subnet_of_switch;
  SegmentationResult result;
};

/// Shortest path from `from` to any switch in `targets` over unused links and
/// unused intermediate switches; among shortest paths the lexicographically
/// smallest link-weight sequence wins. Returns links walked, or nullopt.
inline std::optional<std::vector<LinkIndex>> path_to_targets(
    SrState& st, SwitchId from, const std::set<SwitchId>& targets,
    LinkIndex banned_link) {
  const NetworkGraph& g = *st.g;
  if (targets.count(from)) return std::vector<LinkIndex>{};
  struct NodeBest {
    std::uint32_t dist = ~std::uint32_t{0};
    std::vector<Weight> seq;
    std::vector<LinkIndex> path;
  };
  std::vector<NodeBest> best(g.switch_count());
  best[from].dist = 0;
  std::deque<SwitchId> frontier{from};
  std::optional<NodeBest> found;
  // BFS layer by layer; within a layer expand in path-sequence order so the
  // first settled answer is the lexicographically smallest one.
  while (!frontier.empty() && !found) {
    std::vector<SwitchId> layer(frontier.begin(), frontier.end());
    frontier.clear();
    std::sort(layer.begin(), layer.end(), [&](SwitchId x, SwitchId y) {
      if (best[x].seq != best[y].seq) return best[x].seq < best[y].seq;
      return x < y;
    });
    for (SwitchId v : layer) {
      for (const AdjEntry& e : g.healthy_adjacency()[v]) {
        if (e.link == banned_link || st.link_used[e.link]) continue;
        const bool is_target = targets.count(e.neighbor) > 0;
        if (!is_target && st.switch_used[e.neighbor]) continue;
        NodeBest cand;
        cand.dist = best[v].dist + 1;
        cand.seq = best[v].seq;
        cand.seq.push_back(g.link(e.link).weight);
        cand.path = best[v].path;
        cand.path.push_back(e.link);
        if (is_target) {
          if (!found || cand.seq < found->seq) found = cand;
          continue;
        }
        NodeBest& b = best[e.neighbor];
        if (cand.dist < b.dist || (cand.dist == b.dist && cand.seq < b.seq)) {
          const bool fresh = b.dist == ~std::uint32_t{0};
          b = cand;
          if (fresh) frontier.push_back(e.neighbor);
        }
      }
    }
  }
  if (!found) return std::nullopt;
  return found->path;
}

inline void commit_segment(SrState& st, int subnet, SegmentKind kind,
                           SwitchId attach_switch, LinkIndex entry_link,
                           const std::vector<LinkIndex>& path) {
  const NetworkGraph& g = *st.g;
  Segment seg;
  seg.subnet = subnet;
  seg.kind = kind;
  // The triggering link id convention from the distributed protocol does not
  // apply here; identify the segment by its smallest link weight.
  std::vector<LinkIndex> all_links{entry_link};
  all_links.insert(all_links.end(), path.begin(), path.end());
  Weight min_w = ~Weight{0};
  for (LinkIndex i : all_links) min_w = std::min(min_w, g.link(i).weight);
  seg.id = min_w;
  if (kind == SegmentKind::Starting) seg.switches.push_back(attach_switch);
  SwitchId at = attach_switch;
  for (LinkIndex i : all_links) {
    seg.links.push_back(g.link(i).weight);
    st.link_used[i] = true;
    at = g.link(i).other(at);
    const bool terminal = (i == all_links.back());
    if (!terminal) {
      seg.switches.push_back(at);
      st.switch_used[at] = true;
      st.subnet_of_switch[at] = subnet;
    }
  }
  st.result.segments.push_back(std::move(seg));
}

inline void process_subnet(SrState& st, SwitchId start);

/// Handles one candidate link out of the current subnet's segments.
/// Returns true if it produced a segment.
inline bool try_link(SrState& st, int subnet, SwitchId from, LinkIndex link,
                     const std::set<SwitchId>& targets, SegmentKind kind) {
  const NetworkGraph& g = *st.g;
  const SwitchId q = g.link(link).other(from);
  if (st.switch_used[q] && targets.count(q)) {
    // both endpoints already inside this subnet's segments: unitary segment
    commit_segment(st, subnet, SegmentKind::Unitary, from, link, {});
    return true;
  }
  if (st.switch_used[q]) {
    // leads into a foreign subnet: bridge, no new subnet to spawn
    st.link_used[link] = true;
    st.result.bridges.emplace_back(g.link(link).a, g.link(link).b);
    return false;
  }
  auto path = path_to_targets(st, q, targets, link);
  if (path) {
    commit_segment(st, subnet, kind, from, link, *path);
    return true;
  }
  st.link_used[link] = true;
  st.result.bridges.emplace_back(g.link(link).a, g.link(link).b);
  process_subnet(st, q);  // q becomes the starting switch of a new subnet
  return false;
}

inline void process_subnet(SrState& st, SwitchId start) {
  const NetworkGraph& g = *st.g;
  const int subnet = static_cast<int>(st.result.subnets.size());
  st.result.subnets.push_back(SubnetRecord{subnet, start, false, {}});
  st.switch_used[start] = true;
  st.subnet_of_switch[start] = subnet;
  std::set<SwitchId> segment_switches{start};
  bool have_segment = false;
  for (;;) {
    // lowest-weight unused link adjacent to the subnet's segment switches
    LinkIndex pick = kNoLink;
    SwitchId pick_from = 0;
    for (SwitchId v : segment_switches) {
      for (const AdjEntry& e : g.healthy_adjacency()[v]) {
        if (st.link_used[e.link]) continue;
        if (pick == kNoLink || g.link(e.link).weight < g.link(pick).weight) {
          pick = e.link;
          pick_from = v;
        }
      }
    }
    if (pick == kNoLink) break;
    const SegmentKind kind =
        have_segment ? SegmentKind::Regular : SegmentKind::Starting;
    const std::size_t before = st.result.segments.size();
    if (try_link(st, subnet, pick_from, pick, segment_switches, kind)) {
      have_segment = true;
      for (SwitchId v : st.result.segments.back().switches)
        segment_switches.insert(v);
    }
    (void)before;
  }
  st.result.subnets[subnet].withdrawn = !have_segment;
}

}  // namespace detail

/// Centralized SR over the component containing `start`. Nondeterministic
/// choices are fixed: lowest link weight for candidate links, shortest then
/// lexicographically-lowest-weight paths, depth-first subnet spawning.
inline SegmentationResult centralized_sr(const NetworkGraph& g, SwitchId start) {
  detail::SrState st;
  st.g = &g;
  st.link_used.assign(g.links().size(), false);
  for (LinkIndex i = 0; i < g.links().size(); ++i)
    if (g.link(i).defective) st.link_used[i] = true;
  st.switch_used.assign(g.switch_count(), false);
  st.subnet_of_switch.assign(g.switch_count(), -1);
  detail::process_subnet(st, start);
  // Switches of the component never reached by segments or bridge spawns do
  // not exist: every explored dead end spawns its own subnet. Record subnet
  // membership for reporting.
  for (auto& subnet : st.result.subnets) subnet.switches.clear();
  for (SwitchId v = 0; v < g.switch_count(); ++v)
    if (st.subnet_of_switch[v] >= 0)
      st.result.subnets[st.subnet_of_switch[v]].switches.push_back(v);
  return st.result;
}

// ---------------------------------------------------------------------------
// Channel dependency graph: deadlock freedom and turn-restricted reachability
// ---------------------------------------------------------------------------

/// Directed channels (link, direction); turns permitted unless restricted;
/// immediate U-turns (a channel into its own reverse) are always excluded.
class ChannelDependencyGraph {
 public:
  ChannelDependencyGraph(const NetworkGraph& g,
                         const std::vector<RoutingRestriction>& restrictions)
      : graph_(g) {
    // channel id = 2*healthy_link_pos + dir, dir 0 = a->b
    healthy_.clear();
    link_pos_.assign(g.links().size(), kNoLink);
    for (LinkIndex i = 0; i < g.links().size(); ++i) {
      if (g.link(i).defective) continue;
      link_pos_[i] = static_cast<LinkIndex>(healthy_.size());
      healthy_.push_back(i);
    }
    for (const RoutingRestriction& r : restrictions) {
      const LinkIndex l1 = find_by_weight(r.link1), l2 = find_by_weight(r.link2);
      TDSR_CHECK(l1 != kNoLink && l2 != kNoLink,
                 "restriction references unknown link at switch ", r.at);
      TDSR_CHECK(g.link(l1).touches(r.at) && g.link(l2).touches(r.at),
                 "restriction links do not meet at switch ", r.at);
      if (l1 == l2) {
        // degenerate pair: no turn may connect this link to any other, at
        // either endpoint; the link carries only first/last-hop traffic
        blocked_links_.insert(l1);
      } else {
        forbidden_.insert(turn_key(r.at, l1, l2));
        forbidden_.insert(turn_key(r.at, l2, l1));
      }
    }
    build_edges();
  }

  std::size_t channel_count() const { return 2 * healthy_.size(); }

  bool acyclic() const {
    // Kahn's algorithm over the dependency edges
    std::vector<std::uint32_t> indeg(channel_count(), 0);
    for (const auto& edges : out_)
      for (std::uint32_t t : edges) ++indeg[t];
    std::deque<std::uint32_t> q;
    for (std::uint32_t c = 0; c < channel_count(); ++c)
      if (indeg[c] == 0) q.push_back(c);
    std::size_t seen = 0;
    while (!q.empty()) {
      const std::uint32_t c = q.front();
      q.pop_front();
      ++seen;
      for (std::uint32_t t : out_[c])
        if (--indeg[t] == 0) q.push_back(t);
    }
    return seen == channel_count();
  }

  /// True iff every ordered pair of switches in the same healthy component
  /// is reachable along channels honoring the restrictions.
  bool all_pairs_connected() const {
    const auto comps = connected_components(graph_);
    for (const auto& comp : comps) {
      for (SwitchId s : comp) {
        const auto reached = reachable_from(s);
        for (SwitchId t : comp)
          if (t != s && !reached[t]) return false;
      }
    }
    return true;
  }

  std::vector<bool> reachable_from(SwitchId s) const {
    std::vector<bool> chan_seen(channel_count(), false);
    std::vector<bool> sw(graph_.switch_count(), false);
    sw[s] = true;
    std::deque<std::uint32_t> q;
    for (std::uint32_t p = 0; p < healthy_.size(); ++p) {
      const Link& l = graph_.link(healthy_[p]);
      if (l.a == s) { chan_seen[2 * p] = true; q.push_back(2 * p); }
      if (l.b == s) { chan_seen[2 * p + 1] = true; q.push_back(2 * p + 1); }
    }
    while (!q.empty()) {
      const std::uint32_t c = q.front();
      q.pop_front();
      sw[head_of(c)] = true;
      for (std::uint32_t t : out_[c]) {
        if (!chan_seen[t]) {
          chan_seen[t] = true;
          q.push_back(t);
        }
      }
    }
    return sw;
  }

 private:
  std::uint64_t turn_key(SwitchId at, LinkIndex l1, LinkIndex l2) const {
    return (static_cast<std::uint64_t>(at) << 40) ^
           (static_cast<std::uint64_t>(l1) << 20) ^ l2;
  }

  LinkIndex find_by_weight(Weight w) const {
    for (LinkIndex i : healthy_)
      if (graph_.link(i).weight == w) return i;
    return kNoLink;
  }

  SwitchId head_of(std::uint32_t chan) const {
    const Link& l = graph_.link(healthy_[chan / 2]);
    return (chan % 2 == 0) ? l.b : l.a;
  }

  SwitchId tail_of(std::uint32_t chan) const {
    const Link& l = graph_.link(healthy_[chan / 2]);
    return (chan % 2 == 0) ? l.a : l.b;
  }

  void build_edges() {
    out_.assign(channel_count(), {});
    for (std::uint32_t c = 0; c < channel_count(); ++c) {
      const SwitchId mid = head_of(c);
      const LinkIndex in_link = healthy_[c / 2];
      if (blocked_links_.count(in_link)) continue;
      for (const AdjEntry& e : graph_.healthy_adjacency()[mid]) {
        if (e.link == in_link) continue;  // no immediate U-turn
        if (blocked_links_.count(e.link)) continue;
        if (forbidden_.count(turn_key(mid, in_link, e.link))) continue;
        const std::uint32_t pos = link_pos_[e.link];
        const std::uint32_t next =
            2 * pos + (graph_.link(e.link).a == mid ? 0 : 1);
        out_[c].push_back(next);
      }
    }
  }

  const NetworkGraph& graph_;
  std::vector<LinkIndex> healthy_;
  std::vector<LinkIndex> link_pos_;
  std::set<std::uint64_t> forbidden_;
  std::set<LinkIndex> blocked_links_;
  std::vector<std::vector<std::uint32_t>> out_;
};

inline bool deadlock_free(const NetworkGraph& g,
                          const std::vector<RoutingRestriction>& restrictions) {
  return ChannelDependencyGraph(g, restrictions).acyclic();
}

inline bool all_pairs_connected(const NetworkGraph& g,
                                const std::vector<RoutingRestriction>& restrictions) {
  return ChannelDependencyGraph(g, restrictions).all_pairs_connected();
}

}  // namespace oracle
}  // namespace tdsr
