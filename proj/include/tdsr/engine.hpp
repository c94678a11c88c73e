#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include "tdsr/automaton.hpp"
#include "tdsr/error.hpp"
#include "tdsr/message.hpp"
#include "tdsr/topology.hpp"

namespace tdsr {

struct SimClock {
  std::uint64_t cycle = 0;
  std::uint64_t mst_boundary = 0;
  std::uint64_t label_boundary = 0;
  std::uint64_t segment_boundary = 0;
};

/// Discrete-time engine: per-direction link channels carrying at most one
/// control packet per cycle with single-cycle latency. Deterministic: all
/// iteration orders are fixed, so equal inputs give byte-equal traces.
class Engine : public AutomatonContext {
 public:
  explicit Engine(const NetworkGraph& graph, std::ostream* trace = nullptr)
      : graph_(graph), trace_(trace) {
    switches_.resize(graph.switch_count());
    for (SwitchId s = 0; s < graph.switch_count(); ++s)
      switches_[s].attach(&graph, s);
    channels_.resize(graph.links().size());
    slot_of_.assign(graph.links().size(), {~std::size_t{0}, ~std::size_t{0}});
    const auto& adj = graph.healthy_adjacency();
    for (SwitchId s = 0; s < graph.switch_count(); ++s)
      for (std::size_t slot = 0; slot < adj[s].size(); ++slot) {
        const LinkIndex li = adj[s][slot].link;
        const bool lower = (graph.link(li).a == s);
        slot_of_[li][lower ? 0 : 1] = slot;
      }
  }

  SwitchAutomaton& automaton(SwitchId s) { return switches_[s]; }
  const SwitchAutomaton& automaton(SwitchId s) const { return switches_[s]; }
  std::uint64_t cycle() const override { return cycle_; }
  std::uint64_t last_activity() const { return last_activity_; }
  const std::array<std::uint64_t, 3>& deliveries_per_stage() const {
    return deliveries_per_stage_;
  }

  /// Queues msg on the link direction leaving `from`; earliest delivery is
  /// next cycle, later if the direction is already busy.
  void send(SwitchId from, LinkIndex link, ControlMessage msg) override {
    const Link& l = graph_.link(link);
    TDSR_CHECK(!l.defective, "send over defective link ", l.a, "-", l.b);
    TDSR_CHECK(l.touches(from), "send from non-endpoint ", from);
    const int dir = (from == l.a) ? 0 : 1;  // dir 0 carries a -> b
    channels_[link].pending[dir].push_back(std::move(msg));
  }

  bool quiescent() const {
    for (const Channel& ch : channels_)
      for (int d = 0; d < 2; ++d)
        if (ch.in_flight[d] || !ch.pending[d].empty()) return false;
    return true;
  }

  /// Advances one cycle: delivers every in-flight message (ascending receiver
  /// id, then ascending link weight), then promotes one pending message per
  /// direction for the next cycle.
  void step() {
    ++cycle_;
    struct Delivery {
      SwitchId dst;
      Weight link_weight;
      LinkIndex link;
      int dir;
    };
    std::vector<Delivery> due;
    for (LinkIndex li = 0; li < channels_.size(); ++li)
      for (int d = 0; d < 2; ++d)
        if (channels_[li].in_flight[d]) {
          const Link& l = graph_.link(li);
          due.push_back({d == 0 ? l.b : l.a, l.weight, li, d});
        }
    std::sort(due.begin(), due.end(), [](const Delivery& x, const Delivery& y) {
      if (x.dst != y.dst) return x.dst < y.dst;
      return x.link_weight < y.link_weight;
    });
    for (const Delivery& dv : due) {
      ControlMessage msg = std::move(*channels_[dv.link].in_flight[dv.dir]);
      channels_[dv.link].in_flight[dv.dir].reset();
      deliver(dv.dst, dv.link, dv.dir, msg);
    }
    for (Channel& ch : channels_)
      for (int d = 0; d < 2; ++d)
        if (!ch.in_flight[d] && !ch.pending[d].empty()) {
          ch.in_flight[d] = std::move(ch.pending[d].front());
          ch.pending[d].pop_front();
        }
  }

  /// Wakes every switch at cycle 0, then steps until no message is pending
  /// or in flight. Throws SimTimeout with a state snapshot past max_cycles.
  SimClock run_until_quiescent(std::uint64_t max_cycles) {
    for (SwitchId s = 0; s < graph_.switch_count(); ++s)
      switches_[s].wakeup(*this);
    // promote the wakeup-cycle sends for delivery at cycle 1
    for (Channel& ch : channels_)
      for (int d = 0; d < 2; ++d)
        if (!ch.in_flight[d] && !ch.pending[d].empty()) {
          ch.in_flight[d] = std::move(ch.pending[d].front());
          ch.pending[d].pop_front();
        }
    while (!quiescent()) {
      if (cycle_ >= max_cycles)
        throw SimTimeout("simulation exceeded " + std::to_string(max_cycles) +
                             " cycles without quiescing",
                         diagnostic_snapshot());
      step();
    }
    SimClock clock;
    clock.cycle = cycle_;
    for (const SwitchAutomaton& a : switches_) {
      clock.mst_boundary = std::max(clock.mst_boundary, a.mst_complete_cycle);
      clock.label_boundary = std::max(clock.label_boundary, a.label_complete_cycle);
    }
    clock.segment_boundary = last_activity_;
    TDSR_CHECK(clock.mst_boundary <= clock.label_boundary &&
                   clock.label_boundary <= clock.segment_boundary &&
                   clock.segment_boundary <= clock.cycle,
               "stage boundaries not monotone");
    return clock;
  }

  static std::uint64_t default_max_cycles(const NetworkGraph& g) {
    const std::uint64_t n = std::max<std::uint64_t>(1, g.switch_count());
    return 64 * n * n;
  }

  std::string diagnostic_snapshot() const {
    std::ostringstream os;
    os << "cycle " << cycle_ << "\n";
    std::size_t pending = 0, in_flight = 0;
    for (const Channel& ch : channels_)
      for (int d = 0; d < 2; ++d) {
        pending += ch.pending[d].size();
        if (ch.in_flight[d]) ++in_flight;
      }
    os << "pending " << pending << " in_flight " << in_flight << "\n";
    for (SwitchId s = 0; s < graph_.switch_count(); ++s) {
      const SwitchAutomaton& a = switches_[s];
      os << "switch " << s << " fsm "
         << (a.fsm == MstFsm::Sleeping ? "SL" : a.fsm == MstFsm::Found ? "FO" : "FI")
         << " level " << a.level << " mst " << a.mst_complete << " label "
         << a.label_complete << " area " << a.in_area << "\n";
    }
    return os.str();
  }

 private:
  struct Channel {
    std::array<std::deque<ControlMessage>, 2> pending;
    std::array<std::optional<ControlMessage>, 2> in_flight;
  };

  void deliver(SwitchId dst, LinkIndex link, int dir, const ControlMessage& msg) {
    last_activity_ = cycle_;
    ++deliveries_per_stage_[static_cast<int>(stage_of(msg.payload))];
    if (trace_)
      *trace_ << "cycle " << cycle_ << " deliver " << kind_name(msg.payload) << " "
              << msg.src << "->" << dst << " link " << graph_.link(link).weight
              << "\n";
    const std::size_t slot = slot_of_[link][dir == 0 ? 1 : 0];
    TDSR_CHECK(slot != ~std::size_t{0}, "delivery on unmapped link");
    switches_[dst].dispatch(*this, slot, msg);
  }

  const NetworkGraph& graph_;
  std::ostream* trace_;
  std::vector<SwitchAutomaton> switches_;
  std::vector<Channel> channels_;
  // adjacency slot of each link at its lower/higher endpoint
  std::vector<std::array<std::size_t, 2>> slot_of_;
  std::uint64_t cycle_ = 0;
  std::uint64_t last_activity_ = 0;
  std::array<std::uint64_t, 3> deliveries_per_stage_{0, 0, 0};
};

}  // namespace tdsr
