#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tdsr/error.hpp"
#include "tdsr/topology.hpp"

namespace tdsr {

enum class SegmentKind { Starting, Regular, Unitary };

inline const char* to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::Starting: return "starting";
    case SegmentKind::Regular: return "regular";
    case SegmentKind::Unitary: return "unitary";
  }
  return "?";
}

/// A constructed segment. Identified by the weight of the internal link that
/// triggered it; switches/links are ordered along the segment path. Links
/// are referenced by weight (weights are unique per graph).
struct Segment {
  Weight id = 0;
  int subnet = 0;
  SegmentKind kind = SegmentKind::Regular;
  std::uint32_t expansion = 0;  // wave index within its subnet (1-based)
  std::vector<SwitchId> switches;
  std::vector<Weight> links;
};

/// Bidirectional forbidden turn between two links meeting at one switch.
struct RoutingRestriction {
  SwitchId at = 0;
  Weight link1 = 0;  // the internal link the segment was built on
  Weight link2 = 0;  // the adjacent tree link closing its cycle
};

/// One BUILD/ACK wave of one subnet: which segments it added and how far the
/// wave explored beyond the constructed area (in links).
struct ExpansionRecord {
  int subnet = 0;
  std::uint32_t index = 0;  // 1-based wave number within the subnet
  std::vector<Weight> segments;
  std::uint32_t longest_path = 0;
};

struct SubnetRecord {
  int id = 0;
  SwitchId starting_switch = 0;
  bool withdrawn = false;  // starting switch failed to build any segment
  std::vector<SwitchId> switches;
};

struct SegmentationResult {
  std::vector<Segment> segments;           // in construction (commit) order
  std::vector<SubnetRecord> subnets;
  std::vector<std::pair<SwitchId, SwitchId>> bridges;
  std::vector<RoutingRestriction> restrictions;
  std::vector<ExpansionRecord> expansions;

  /// Max over subnets of the number of segment-building waves.
  std::uint32_t num_expansions() const {
    std::map<int, std::uint32_t> per_subnet;
    for (const ExpansionRecord& e : expansions)
      if (!e.segments.empty())
        per_subnet[e.subnet] = std::max(per_subnet[e.subnet], e.index);
    std::uint32_t m = 0;
    for (const auto& [subnet, waves] : per_subnet) m = std::max(m, waves);
    return m;
  }

  std::uint32_t max_expansion_distance() const {
    std::uint32_t m = 0;
    for (const ExpansionRecord& e : expansions)
      m = std::max(m, e.longest_path);
    return m;
  }
};

// ---------------------------------------------------------------------------
// Line-oriented result dump
//   segment <id> subnet <s> kind <k> switches <...> links <...>
//   bridge <idA> <idB>
//   restriction <switch> <linkW1> <linkW2>
// ---------------------------------------------------------------------------

inline void write_segmentation(std::ostream& os, const SegmentationResult& r) {
  for (const Segment& s : r.segments) {
    os << "segment " << s.id << " subnet " << s.subnet << " kind "
       << to_string(s.kind) << " switches";
    for (SwitchId v : s.switches) os << " " << v;
    os << " links";
    for (Weight w : s.links) os << " " << w;
    os << "\n";
  }
  for (const auto& [a, b] : r.bridges) os << "bridge " << a << " " << b << "\n";
  for (const RoutingRestriction& t : r.restrictions)
    os << "restriction " << t.at << " " << t.link1 << " " << t.link2 << "\n";
}

inline SegmentationResult read_segmentation(std::istream& is) {
  SegmentationResult r;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "segment") {
      Segment s;
      std::string kw, kind;
      if (!(ls >> s.id >> kw >> s.subnet) || kw != "subnet")
        throw IoError("bad segment line " + std::to_string(line_no));
      if (!(ls >> kw >> kind) || kw != "kind")
        throw IoError("bad segment line " + std::to_string(line_no));
      if (kind == "starting") s.kind = SegmentKind::Starting;
      else if (kind == "regular") s.kind = SegmentKind::Regular;
      else if (kind == "unitary") s.kind = SegmentKind::Unitary;
      else throw IoError("bad segment kind on line " + std::to_string(line_no));
      if (!(ls >> kw) || kw != "switches")
        throw IoError("bad segment line " + std::to_string(line_no));
      std::string tok;
      bool in_links = false;
      while (ls >> tok) {
        if (tok == "links") { in_links = true; continue; }
        if (in_links) s.links.push_back(static_cast<Weight>(std::stoul(tok)));
        else s.switches.push_back(static_cast<SwitchId>(std::stoul(tok)));
      }
      if (!in_links) throw IoError("segment line missing links on line " +
                                   std::to_string(line_no));
      r.segments.push_back(std::move(s));
    } else if (tag == "bridge") {
      SwitchId a, b;
      if (!(ls >> a >> b)) throw IoError("bad bridge line " + std::to_string(line_no));
      r.bridges.emplace_back(a, b);
    } else if (tag == "restriction") {
      RoutingRestriction t;
      if (!(ls >> t.at >> t.link1 >> t.link2))
        throw IoError("bad restriction line " + std::to_string(line_no));
      r.restrictions.push_back(t);
    } else {
      throw IoError("unknown directive '" + tag + "' on line " + std::to_string(line_no));
    }
  }
  return r;
}

}  // namespace tdsr
