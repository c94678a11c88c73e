#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "tdsr/interval.hpp"
#include "tdsr/topology.hpp"

namespace tdsr {

enum class MstFsm { Sleeping, Found, Find };

// --- MST construction stage --------------------------------------------------

struct WakeupMsg {};

struct ConnectMsg {
  int level = 0;
};

struct InitMstMsg {
  int level = 0;
  std::optional<Weight> fragment_id;  // empty for level-0 fragments
  MstFsm sender_fsm = MstFsm::Found;
};

struct TestMsg {
  int level = 0;
  std::optional<Weight> fragment_id;
};

struct AcceptMsg {};
struct RejectMsg {};

struct ReportMsg {
  std::optional<Weight> best;  // empty = no minimum-weight outgoing link
};

struct ChcoreMsg {};

/// Stage-transition broadcast (not in the original GHS): carries the elected
/// root down the finished tree so every switch can enter the labeling stage.
struct FinishMsg {
  SwitchId root = 0;
};

// --- Labeling stage ----------------------------------------------------------

struct InitLabelMsg {};

struct CountMsg {
  std::uint32_t size = 0;
};

struct LabelMsg {
  std::uint32_t lower = 0;
};

struct AckLabelMsg {
  std::uint32_t max_lower = 0;
};

/// Sent once over every adjacent internal link when a switch's label is
/// final, so internal-link endpoints can run label-based suitability checks.
struct LabelAnnounceMsg {
  IntervalLabel label;
};

// --- Segment construction stage ----------------------------------------------

struct BuildMsg {
  SwitchId subnet_root = 0;
  IntervalLabel subnet_root_label;
  std::uint32_t wave = 0;
  std::optional<IntervalLabel> frontier;  // label of first switch outside the area
  std::uint32_t hops = 0;                 // links traversed outside the area
};

struct AckSegMsg {
  SwitchId subnet_root = 0;
  std::uint32_t wave = 0;
  std::optional<Weight> candidate;  // best suitable internal link below
  bool pending = false;             // unresolved internal links remain below
  std::uint32_t max_hops = 0;
};

struct StartMsg {};

using Payload =
    std::variant<WakeupMsg, ConnectMsg, InitMstMsg, TestMsg, AcceptMsg, RejectMsg,
                 ReportMsg, ChcoreMsg, FinishMsg, InitLabelMsg, CountMsg, LabelMsg,
                 AckLabelMsg, LabelAnnounceMsg, BuildMsg, AckSegMsg, StartMsg>;

struct ControlMessage {
  SwitchId src = 0;
  Payload payload;
};

inline const char* kind_name(const Payload& p) {
  struct Visitor {
    const char* operator()(const WakeupMsg&) const { return "WAKEUP"; }
    const char* operator()(const ConnectMsg&) const { return "CONNECT"; }
    const char* operator()(const InitMstMsg&) const { return "INIT_MST"; }
    const char* operator()(const TestMsg&) const { return "TEST"; }
    const char* operator()(const AcceptMsg&) const { return "ACCEPT"; }
    const char* operator()(const RejectMsg&) const { return "REJECT"; }
    const char* operator()(const ReportMsg&) const { return "REPORT"; }
    const char* operator()(const ChcoreMsg&) const { return "CHCORE"; }
    const char* operator()(const FinishMsg&) const { return "FINISH"; }
    const char* operator()(const InitLabelMsg&) const { return "INIT_LABEL"; }
    const char* operator()(const CountMsg&) const { return "COUNT"; }
    const char* operator()(const LabelMsg&) const { return "LABEL"; }
    const char* operator()(const AckLabelMsg&) const { return "ACK_LABEL"; }
    const char* operator()(const LabelAnnounceMsg&) const { return "LABEL_ANNOUNCE"; }
    const char* operator()(const BuildMsg&) const { return "BUILD"; }
    const char* operator()(const AckSegMsg&) const { return "ACK_SEG"; }
    const char* operator()(const StartMsg&) const { return "START"; }
  };
  return std::visit(Visitor{}, p);
}

enum class Stage { Mst = 0, Labeling = 1, Segmentation = 2 };

inline Stage stage_of(const Payload& p) {
  const std::size_t i = p.index();
  if (i <= 8) return Stage::Mst;  // through FinishMsg
  if (i <= 13) return Stage::Labeling;  // through LabelAnnounceMsg
  return Stage::Segmentation;
}

}  // namespace tdsr
