#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "tdsr/error.hpp"
#include "tdsr/interval.hpp"
#include "tdsr/message.hpp"
#include "tdsr/topology.hpp"

namespace tdsr {

/// How an automaton talks to the engine: link-indexed sends plus the clock.
class AutomatonContext {
 public:
  virtual ~AutomatonContext() = default;
  virtual void send(SwitchId from, LinkIndex link, ControlMessage msg) = 0;
  virtual std::uint64_t cycle() const = 0;
};

enum class LinkClass { External, Tree, Internal };

/// Suitability of an internal link with incomparable endpoint labels: the
/// link can seed a segment unless the first switch outside the constructed
/// area on the probing path is a common ancestor of both endpoints.
inline bool evaluate_suitability(const std::optional<IntervalLabel>& frontier,
                                 const IntervalLabel& u, const IntervalLabel& v) {
  if (!frontier) return true;
  return !is_common_ancestor(*frontier, u, v);
}

/// Per-switch protocol state across all three stages, driven by messages.
/// Passive: all transitions happen inside dispatch()/wakeup() calls.
class SwitchAutomaton {
 public:
  // --- MST stage -------------------------------------------------------------
  MstFsm fsm = MstFsm::Sleeping;
  int level = 0;
  std::optional<Weight> fragment_id;
  std::vector<LinkClass> link_class;        // per adjacency slot
  std::optional<std::size_t> in_branch;     // slot toward the fragment core
  std::optional<std::size_t> test_edge;
  std::optional<Weight> best_weight;
  std::optional<std::size_t> best_edge;
  int find_count = 0;
  bool mst_complete = false;
  SwitchId root = 0;
  std::uint64_t mst_complete_cycle = 0;

  // --- Labeling stage ---------------------------------------------------------
  std::optional<std::size_t> label_parent;  // slot toward the elected root
  std::uint32_t subtree_size = 1;
  std::vector<std::optional<std::uint32_t>> child_size;  // per slot
  std::vector<std::optional<std::uint32_t>> child_max;   // per slot
  std::optional<IntervalLabel> label;       // a set on LABEL, b on completion
  std::uint32_t label_lower = 0;
  bool label_complete = false;
  std::uint64_t label_complete_cycle = 0;

  // --- Segment construction stage ----------------------------------------------
  enum class Side { Open, Joined, Closed };
  std::vector<std::optional<IntervalLabel>> nbr_label;  // per slot (internal links)
  std::vector<std::optional<SwitchId>> nbr_id;
  std::vector<Side> side;                  // my end of each internal link
  std::vector<std::uint32_t> side_wave;
  std::vector<std::optional<SwitchId>> side_subnet;
  std::vector<bool> link_assigned;
  std::vector<bool> bridge;                // tree links crossed by START
  std::vector<bool> child_pending;         // last wave's per-child pending flag
  bool in_area = false;
  std::optional<Weight> chosen;            // segment this switch belongs to
  bool uplink_joined = false;
  std::uint32_t joined_wave = 0;
  std::optional<SwitchId> subnet_root;
  bool is_starting = false;
  bool withdrawn = false;
  std::uint64_t started_cycle = 0;
  IntervalLabel subnet_root_label;
  std::uint32_t wave = 0;
  // wave transients
  std::optional<IntervalLabel> frontier_in;
  std::vector<std::size_t> local_cands;    // adjacency slots suitable this wave
  std::size_t acks_needed = 0, acks_got = 0;
  std::optional<Weight> best_cand;
  bool pending_agg = false;
  std::uint32_t hops_agg = 0;
  std::uint32_t my_eff_hops = 0;
  std::map<std::pair<SwitchId, std::uint32_t>, std::uint32_t> explored;

  SwitchAutomaton() = default;

  void attach(const NetworkGraph* graph, SwitchId self) {
    graph_ = graph;
    self_ = self;
    const auto& row = graph->healthy_adjacency()[self];
    const std::size_t n = row.size();
    link_class.assign(n, LinkClass::External);
    child_size.assign(n, std::nullopt);
    child_max.assign(n, std::nullopt);
    nbr_label.assign(n, std::nullopt);
    nbr_id.assign(n, std::nullopt);
    side.assign(n, Side::Open);
    side_wave.assign(n, 0);
    side_subnet.assign(n, std::nullopt);
    link_assigned.assign(n, false);
    bridge.assign(n, false);
    child_pending.assign(n, false);
  }

  SwitchId id() const { return self_; }
  std::size_t degree() const { return adj().size(); }
  const std::vector<AdjEntry>& adj() const {
    return graph_->healthy_adjacency()[self_];
  }
  Weight slot_weight(std::size_t slot) const {
    return graph_->link(adj()[slot].link).weight;
  }
  SwitchId slot_neighbor(std::size_t slot) const { return adj()[slot].neighbor; }

  // ---------------------------------------------------------------------------
  // Entry points
  // ---------------------------------------------------------------------------

  /// Initial stimulus; every switch receives one at cycle 0. Idempotent.
  void wakeup(AutomatonContext& ctx) {
    if (fsm != MstFsm::Sleeping) return;
    if (degree() == 0) {
      // isolated switch: all three stages complete immediately, empty result
      fsm = MstFsm::Found;
      complete_mst(ctx, self_, std::nullopt);
      return;
    }
    fsm = MstFsm::Found;
    level = 0;
    fragment_id.reset();
    link_class[0] = LinkClass::Tree;  // adjacency is weight-sorted: slot 0 = MWL
    ctx.send(self_, adj()[0].link, {self_, ConnectMsg{0}});
    for (std::size_t s = 1; s < degree(); ++s)
      ctx.send(self_, adj()[s].link, {self_, WakeupMsg{}});
    drain_held(ctx);
  }

  void dispatch(AutomatonContext& ctx, std::size_t slot, const ControlMessage& msg) {
    std::visit(
        [&](const auto& p) { handle(ctx, slot, msg.src, p); },
        msg.payload);
    drain_held(ctx);
  }

 private:
  // ---------------------------------------------------------------------------
  // MST stage (GHS)
  // ---------------------------------------------------------------------------

  void handle(AutomatonContext& ctx, std::size_t, SwitchId, const WakeupMsg&) {
    wakeup(ctx);
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId src,
              const ConnectMsg& m) {
    TDSR_CHECK(fsm != MstFsm::Sleeping, "CONNECT before wakeup at ", self_);
    TDSR_CHECK(link_class[slot] != LinkClass::Internal,
               "CONNECT on internal link at ", self_);
    if (m.level < level) {
      absorb(ctx, slot);
    } else if (link_class[slot] == LinkClass::Tree) {
      // both sides chose this link: merge, the link becomes the new core
      TDSR_CHECK(m.level == level, "merge with unequal levels at ", self_);
      ctx.send(self_, adj()[slot].link,
               {self_, InitMstMsg{level + 1, slot_weight(slot), MstFsm::Find}});
    } else {
      held_connects_.push_back(HeldConnect{slot, m.level, src});
    }
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId,
              const InitMstMsg& m) {
    TDSR_CHECK(link_class[slot] == LinkClass::Tree,
               "INIT_MST on non-tree link at ", self_);
    TDSR_CHECK(m.level >= level, "fragment level decreased at ", self_);
    level = m.level;
    fragment_id = m.fragment_id;
    in_branch = slot;
    best_weight.reset();
    best_edge.reset();
    fsm = m.sender_fsm;
    for (std::size_t s = 0; s < degree(); ++s) {
      if (s == slot || link_class[s] != LinkClass::Tree) continue;
      if (m.sender_fsm == MstFsm::Find) ++find_count;
      ctx.send(self_, adj()[s].link,
               {self_, InitMstMsg{m.level, m.fragment_id, m.sender_fsm}});
    }
    if (m.sender_fsm == MstFsm::Find) start_test(ctx);
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId src,
              const TestMsg& m) {
    TDSR_CHECK(fsm != MstFsm::Sleeping, "TEST before wakeup at ", self_);
    if (m.fragment_id && fragment_id && *m.fragment_id == *fragment_id) {
      // same fragment: the tested link is internal
      if (link_class[slot] == LinkClass::External)
        link_class[slot] = LinkClass::Internal;
      if (test_edge && *test_edge == slot) {
        start_test(ctx);  // I was testing it too; no reply needed either way
      } else {
        ctx.send(self_, adj()[slot].link, {self_, RejectMsg{}});
      }
    } else if (m.level <= level) {
      ctx.send(self_, adj()[slot].link, {self_, AcceptMsg{}});
    } else {
      held_tests_.push_back(HeldTest{slot, m.level, m.fragment_id, src});
    }
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId, const AcceptMsg&) {
    TDSR_CHECK(test_edge && *test_edge == slot, "unexpected ACCEPT at ", self_);
    test_edge.reset();
    const Weight w = slot_weight(slot);
    if (!best_weight || w < *best_weight) {
      best_weight = w;
      best_edge = slot;
    }
    maybe_report(ctx);
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId, const RejectMsg&) {
    if (link_class[slot] == LinkClass::External)
      link_class[slot] = LinkClass::Internal;
    TDSR_CHECK(test_edge && *test_edge == slot, "unexpected REJECT at ", self_);
    start_test(ctx);
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId src,
              const ReportMsg& m) {
    if (!in_branch || slot != *in_branch) {
      // report from a successor branch
      TDSR_CHECK(link_class[slot] == LinkClass::Tree, "REPORT from non-successor at ",
                 self_);
      --find_count;
      if (m.best && (!best_weight || *m.best < *best_weight)) {
        best_weight = *m.best;
        best_edge = slot;
      }
      maybe_report(ctx);
    } else if (fsm == MstFsm::Find) {
      held_core_report_ = HeldReport{slot, m.best, src};
    } else {
      resolve_core(ctx, slot, m.best, src);
    }
  }

  void handle(AutomatonContext& ctx, std::size_t, SwitchId, const ChcoreMsg&) {
    change_core(ctx);
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId, const FinishMsg& m) {
    complete_mst(ctx, m.root, slot);
  }

  void absorb(AutomatonContext& ctx, std::size_t slot) {
    link_class[slot] = LinkClass::Tree;
    if (fsm == MstFsm::Find) ++find_count;
    ctx.send(self_, adj()[slot].link, {self_, InitMstMsg{level, fragment_id, fsm}});
  }

  /// Begin/continue the local minimum-weight external search.
  void start_test(AutomatonContext& ctx) {
    for (std::size_t s = 0; s < degree(); ++s) {
      if (link_class[s] != LinkClass::External) continue;
      test_edge = s;
      ctx.send(self_, adj()[s].link, {self_, TestMsg{level, fragment_id}});
      return;
    }
    test_edge.reset();
    maybe_report(ctx);
  }

  void maybe_report(AutomatonContext& ctx) {
    if (fsm != MstFsm::Find || find_count != 0 || test_edge) return;
    fsm = MstFsm::Found;
    TDSR_CHECK(in_branch.has_value(), "report with no core direction at ", self_);
    ctx.send(self_, adj()[*in_branch].link, {self_, ReportMsg{best_weight}});
  }

  /// Core switch comparing its own best candidate with the sibling's report.
  void resolve_core(AutomatonContext& ctx, std::size_t slot,
                    std::optional<Weight> sibling_best, SwitchId) {
    const bool mine_none = !best_weight, theirs_none = !sibling_best;
    if (mine_none && theirs_none) {
      // no outgoing link anywhere: the component MST is final
      const SwitchId sibling = slot_neighbor(slot);
      complete_mst(ctx, std::min(self_, sibling), std::nullopt);
    } else if (theirs_none || (!mine_none && *best_weight < *sibling_best)) {
      change_core(ctx);  // the MWL lies on my side
    }
    // otherwise the sibling owns the better candidate and acts
  }

  void change_core(AutomatonContext& ctx) {
    TDSR_CHECK(best_edge.has_value(), "change-core without candidate at ", self_);
    const std::size_t be = *best_edge;
    if (link_class[be] == LinkClass::Tree) {
      ctx.send(self_, adj()[be].link, {self_, ChcoreMsg{}});
    } else {
      link_class[be] = LinkClass::Tree;
      ctx.send(self_, adj()[be].link, {self_, ConnectMsg{level}});
    }
  }

  /// MST stage done: record the root, notify the subtree, enter labeling.
  /// `from` is the tree slot the FINISH arrived on (nullopt at core/isolated).
  void complete_mst(AutomatonContext& ctx, SwitchId elected_root,
                    std::optional<std::size_t> from) {
    if (mst_complete) return;
    mst_complete = true;
    root = elected_root;
    mst_complete_cycle = ctx.cycle();
    for (std::size_t s = 0; s < degree(); ++s) {
      TDSR_CHECK(link_class[s] != LinkClass::External,
                 "external link at MST completion at ", self_);
    }
    if (from) {
      label_parent = from;
    } else if (self_ != elected_root && in_branch) {
      label_parent = in_branch;  // non-root core endpoint: parent is the core link
    }
    for (std::size_t s = 0; s < degree(); ++s) {
      if (link_class[s] != LinkClass::Tree) continue;
      if (from && s == *from) continue;
      if (!from && in_branch && s == *in_branch) continue;  // sibling detects itself
      ctx.send(self_, adj()[s].link, {self_, FinishMsg{elected_root}});
    }
    begin_labeling(ctx);
  }

  // ---------------------------------------------------------------------------
  // Labeling stage
  // ---------------------------------------------------------------------------

  std::vector<std::size_t> tree_children() const {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < degree(); ++s)
      if (link_class[s] == LinkClass::Tree &&
          (!label_parent || s != *label_parent))
        out.push_back(s);  // adjacency order = ascending weight = DFS order
    return out;
  }

  void begin_labeling(AutomatonContext& ctx) {
    if (degree() == 0) {
      label = IntervalLabel{0, 0};
      finish_labeling(ctx);
      return;
    }
    if (self_ == root) {
      for (std::size_t s : tree_children())
        ctx.send(self_, adj()[s].link, {self_, InitLabelMsg{}});
      // a root with no children is an isolated case handled above
    }
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId, const InitLabelMsg&) {
    TDSR_CHECK(mst_complete, "INIT_LABEL before MST completion at ", self_);
    TDSR_CHECK(label_parent && *label_parent == slot,
               "INIT_LABEL from non-parent at ", self_);
    const auto children = tree_children();
    for (std::size_t s : children)
      ctx.send(self_, adj()[s].link, {self_, InitLabelMsg{}});
    if (children.empty())
      ctx.send(self_, adj()[slot].link, {self_, CountMsg{1}});
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId, const CountMsg& m) {
    TDSR_CHECK(!child_size[slot].has_value(), "duplicate COUNT at ", self_);
    child_size[slot] = m.size;
    const auto children = tree_children();
    std::uint32_t total = 1;
    for (std::size_t s : children) {
      if (!child_size[s]) return;  // still counting
      total += *child_size[s];
    }
    subtree_size = total;
    if (self_ == root) {
      label_lower = 0;
      dispatch_child_labels(ctx);
    } else {
      ctx.send(self_, adj()[*label_parent].link, {self_, CountMsg{subtree_size}});
    }
  }

  void dispatch_child_labels(AutomatonContext& ctx) {
    std::uint32_t next = label_lower + 1;
    for (std::size_t s : tree_children()) {
      ctx.send(self_, adj()[s].link, {self_, LabelMsg{next}});
      next += *child_size[s];
    }
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId, const LabelMsg& m) {
    TDSR_CHECK(label_parent && *label_parent == slot, "LABEL from non-parent at ",
               self_);
    label_lower = m.lower;
    if (tree_children().empty()) {
      label = IntervalLabel{label_lower, label_lower};
      finish_labeling(ctx);
    } else {
      dispatch_child_labels(ctx);
    }
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId, const AckLabelMsg& m) {
    TDSR_CHECK(!child_max[slot].has_value(), "duplicate ACK_LABEL at ", self_);
    child_max[slot] = m.max_lower;
    std::uint32_t hi = label_lower;
    for (std::size_t s : tree_children()) {
      if (!child_max[s]) return;
      hi = std::max(hi, *child_max[s]);
    }
    label = IntervalLabel{label_lower, hi};
    finish_labeling(ctx);
  }

  /// Upper bound fixed: announce the label across internal links, ack the
  /// parent; the root instead opens the segment construction stage.
  void finish_labeling(AutomatonContext& ctx) {
    label_complete = true;
    label_complete_cycle = ctx.cycle();
    for (std::size_t s = 0; s < degree(); ++s)
      if (link_class[s] == LinkClass::Internal)
        ctx.send(self_, adj()[s].link, {self_, LabelAnnounceMsg{*label}});
    if (degree() == 0) {
      // isolated switch: it is its own subnet with an empty result
      in_area = true;
      is_starting = true;
      subnet_root = self_;
      subnet_root_label = *label;
      started_cycle = ctx.cycle();
      return;
    }
    if (self_ == root) {
      start_segmentation(ctx);
    } else {
      ctx.send(self_, adj()[*label_parent].link, {self_, AckLabelMsg{label->b}});
    }
  }

  // ---------------------------------------------------------------------------
  // Segment construction stage
  // ---------------------------------------------------------------------------

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId src,
              const LabelAnnounceMsg& m) {
    TDSR_CHECK(link_class[slot] == LinkClass::Internal,
               "LABEL_ANNOUNCE on non-internal link at ", self_);
    nbr_label[slot] = m.label;
    nbr_id[slot] = src;
    retry_held_builds(ctx);
  }

  void start_segmentation(AutomatonContext& ctx) {
    in_area = true;
    is_starting = true;
    subnet_root = self_;
    subnet_root_label = *label;
    started_cycle = ctx.cycle();
    launch_wave(ctx, 1);
  }

  std::vector<std::size_t> wave_children() const {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < degree(); ++s) {
      if (link_class[s] != LinkClass::Tree || bridge[s]) continue;
      if (label_parent && s == *label_parent) continue;
      out.push_back(s);
    }
    return out;
  }

  void launch_wave(AutomatonContext& ctx, std::uint32_t w) {
    wave = w;
    reset_wave_transients();
    const auto children = wave_children();
    acks_needed = children.size();
    for (std::size_t s : children)
      ctx.send(self_, adj()[s].link,
               {self_, BuildMsg{*subnet_root, subnet_root_label, w, std::nullopt, 1}});
    if (acks_needed == 0) finalize_wave(ctx);
  }

  void reset_wave_transients() {
    frontier_in.reset();
    local_cands.clear();
    acks_got = 0;
    acks_needed = 0;
    best_cand.reset();
    pending_agg = false;
    hops_agg = 0;
    my_eff_hops = 0;
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId, const BuildMsg& m) {
    TDSR_CHECK(label_complete, "BUILD before labeling completion at ", self_);
    TDSR_CHECK(link_class[slot] == LinkClass::Tree, "BUILD on non-tree link at ",
               self_);
    TDSR_CHECK(label_parent && slot == *label_parent,
               "BUILD from non-parent at ", self_);
    if (!labels_ready()) {
      held_builds_.push_back(HeldBuild{slot, m});
      return;
    }
    process_build(ctx, slot, m);
  }

  bool labels_ready() const {
    for (std::size_t s = 0; s < degree(); ++s)
      if (link_class[s] == LinkClass::Internal && !nbr_label[s]) return false;
    return true;
  }

  void retry_held_builds(AutomatonContext& ctx) {
    while (!held_builds_.empty() && labels_ready()) {
      HeldBuild h = held_builds_.front();
      held_builds_.pop_front();
      process_build(ctx, h.slot, h.msg);
    }
  }

  void process_build(AutomatonContext& ctx, std::size_t /*slot*/, const BuildMsg& m) {
    wave = m.wave;
    subnet_root = m.subnet_root;
    subnet_root_label = m.subnet_root_label;
    reset_wave_transients();
    my_eff_hops = in_area ? 0 : m.hops;
    auto key = std::make_pair(m.subnet_root, m.wave);
    auto it = explored.find(key);
    if (it == explored.end() || it->second < my_eff_hops) explored[key] = my_eff_hops;
    std::optional<IntervalLabel> out_frontier;
    if (!in_area) {
      frontier_in = m.frontier;
      out_frontier = m.frontier ? m.frontier : label;
      evaluate_local_candidates();
    }
    const auto children = wave_children();
    acks_needed = children.size();
    for (std::size_t s : children)
      ctx.send(self_, adj()[s].link,
               {self_, BuildMsg{m.subnet_root, m.subnet_root_label, m.wave,
                                out_frontier, my_eff_hops + 1}});
    if (acks_needed == 0) finalize_wave(ctx);
  }

  /// Collects this wave's suitable unassigned internal links at this switch.
  /// Only switches outside the constructed area evaluate.
  void evaluate_local_candidates() {
    for (std::size_t s = 0; s < degree(); ++s) {
      if (link_class[s] != LinkClass::Internal || link_assigned[s]) continue;
      const IntervalLabel& mine = *label;
      const IntervalLabel& other = *nbr_label[s];
      // endpoints outside my subnet's subtree can never close a cycle here
      if (!(other.a >= subnet_root_label.a && other.b <= subnet_root_label.b))
        continue;
      if (is_ancestor(mine, other)) continue;  // descendant endpoint drives
      bool suitable;
      if (is_ancestor(other, mine)) {
        // the other endpoint is my ancestor: the link closes a cycle hanging
        // from it; buildable once that ancestor is inside the area
        suitable = !frontier_in || is_ancestor(other, *frontier_in);
      } else {
        suitable = evaluate_suitability(frontier_in, mine, other);
      }
      if (suitable) local_cands.push_back(s);
    }
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId, const AckSegMsg& m) {
    TDSR_CHECK(m.wave == wave && subnet_root && m.subnet_root == *subnet_root,
               "stray ACK_SEG at ", self_);
    TDSR_CHECK(acks_got < acks_needed, "excess ACK_SEG at ", self_);
    ++acks_got;
    if (m.candidate && (!best_cand || *m.candidate < *best_cand))
      best_cand = m.candidate;
    pending_agg = pending_agg || m.pending;
    hops_agg = std::max(hops_agg, m.max_hops);
    child_pending[slot] = m.pending;
    if (acks_got == acks_needed) finalize_wave(ctx);
  }

  void finalize_wave(AutomatonContext& ctx) {
    for (std::size_t s : local_cands) {
      const Weight w = slot_weight(s);
      if (!best_cand || w < *best_cand) best_cand = w;
    }
    hops_agg = std::max(hops_agg, my_eff_hops);
    const bool had_area = in_area;
    if (!in_area && best_cand) {
      chosen = best_cand;
      uplink_joined = true;
      in_area = true;
      joined_wave = wave;
    }
    if (is_starting && !chosen && best_cand) {
      chosen = best_cand;  // the subnet's starting segment passes through me
      joined_wave = wave;
    }
    for (std::size_t s : local_cands) {
      const Weight w = slot_weight(s);
      side[s] = (chosen && *chosen == w && joined_wave == wave && !had_area)
                    ? Side::Joined
                    : Side::Closed;
      link_assigned[s] = true;
      side_wave[s] = wave;
      side_subnet[s] = subnet_root;
    }
    if (had_area) {
      // attach-point closure for switches constructed before this wave:
      // anything still open here resolves from the other endpoint's side.
      // Freshly joined switches wait one wave so their closures commit after
      // the segments they attach to.
      for (std::size_t s = 0; s < degree(); ++s) {
        if (link_class[s] != LinkClass::Internal || link_assigned[s]) continue;
        side[s] = Side::Closed;
        link_assigned[s] = true;
        side_wave[s] = wave;
        side_subnet[s] = subnet_root;
      }
    }
    const bool pending_self = has_open_internal();
    const bool pending_out = pending_agg || pending_self;
    if (is_starting) {
      coordinator_decide(ctx, pending_out);
    } else {
      TDSR_CHECK(label_parent.has_value(), "non-root without parent at ", self_);
      ctx.send(self_, adj()[*label_parent].link,
               {self_, AckSegMsg{*subnet_root, wave, best_cand, pending_out, hops_agg}});
    }
  }

  bool has_open_internal() const {
    for (std::size_t s = 0; s < degree(); ++s)
      if (link_class[s] == LinkClass::Internal && !link_assigned[s]) return true;
    return false;
  }

  void coordinator_decide(AutomatonContext& ctx, bool pending) {
    const bool progress = best_cand.has_value();
    if (progress && pending) {
      launch_wave(ctx, wave + 1);
    } else if (!progress && pending) {
      if (!chosen) withdrawn = true;  // never built the starting segment
      bool sent = false;
      for (std::size_t s = 0; s < degree(); ++s) {
        if (link_class[s] == LinkClass::Tree && !bridge[s] && child_pending[s]) {
          ctx.send(self_, adj()[s].link, {self_, StartMsg{}});
          sent = true;
        }
      }
      TDSR_CHECK(sent, "stalled subnet with no pending branch at ", self_);
    }
    // progress && !pending: subnet complete; !progress && !pending: nothing to do
  }

  void handle(AutomatonContext& ctx, std::size_t slot, SwitchId, const StartMsg&) {
    TDSR_CHECK(label_complete, "START before labeling completion at ", self_);
    if (in_area || chosen) {
      // inside the constructed area: relay toward the pending region
      bool sent = false;
      for (std::size_t s = 0; s < degree(); ++s) {
        if (link_class[s] == LinkClass::Tree && !bridge[s] && child_pending[s] &&
            (!label_parent || s != *label_parent)) {
          ctx.send(self_, adj()[s].link, {self_, StartMsg{}});
          sent = true;
        }
      }
      TDSR_CHECK(sent, "START relay with no pending branch at ", self_);
      return;
    }
    // first unassigned switch on the pending path: new subnet starts here
    bridge[slot] = true;
    in_area = true;
    is_starting = true;
    subnet_root = self_;
    subnet_root_label = *label;
    started_cycle = ctx.cycle();
    launch_wave(ctx, 1);
  }

  // ---------------------------------------------------------------------------
  // Held-message machinery: deferred TEST replies, unreciprocated CONNECTs,
  // a core report arriving mid-search, BUILDs awaiting neighbor labels.
  // ---------------------------------------------------------------------------

  struct HeldConnect {
    std::size_t slot;
    int level;
    SwitchId src;
  };
  struct HeldTest {
    std::size_t slot;
    int level;
    std::optional<Weight> fragment_id;
    SwitchId src;
  };
  struct HeldReport {
    std::size_t slot;
    std::optional<Weight> best;
    SwitchId src;
  };
  struct HeldBuild {
    std::size_t slot;
    BuildMsg msg;
  };

  void drain_held(AutomatonContext& ctx) {
    bool progress = true;
    while (progress) {
      progress = false;
      for (auto it = held_connects_.begin(); it != held_connects_.end(); ++it) {
        const bool absorbable = it->level < level;
        const bool mergeable =
            link_class[it->slot] == LinkClass::Tree && it->level == level;
        if (absorbable || mergeable) {
          HeldConnect h = *it;
          held_connects_.erase(it);
          handle(ctx, h.slot, h.src, ConnectMsg{h.level});
          progress = true;
          break;
        }
      }
      if (progress) continue;
      for (auto it = held_tests_.begin(); it != held_tests_.end(); ++it) {
        const bool same_fragment =
            it->fragment_id && fragment_id && *it->fragment_id == *fragment_id;
        if (same_fragment || it->level <= level) {
          HeldTest h = *it;
          held_tests_.erase(it);
          handle(ctx, h.slot, h.src, TestMsg{h.level, h.fragment_id});
          progress = true;
          break;
        }
      }
      if (progress) continue;
      if (held_core_report_ && fsm == MstFsm::Found) {
        HeldReport h = *held_core_report_;
        held_core_report_.reset();
        resolve_core(ctx, h.slot, h.best, h.src);
        progress = true;
      }
    }
  }

  const NetworkGraph* graph_ = nullptr;
  SwitchId self_ = 0;
  std::deque<HeldConnect> held_connects_;
  std::deque<HeldTest> held_tests_;
  std::optional<HeldReport> held_core_report_;
  std::deque<HeldBuild> held_builds_;
};

}  // namespace tdsr
