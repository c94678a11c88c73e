#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tdsr/error.hpp"
#include "tdsr/rng.hpp"

namespace tdsr {

using SwitchId = std::uint32_t;
using Weight = std::uint32_t;
using LinkIndex = std::uint32_t;

constexpr LinkIndex kNoLink = ~LinkIndex{0};

struct Link {
  SwitchId a = 0;
  SwitchId b = 0;
  Weight weight = 0;  // 0 = not yet assigned
  bool defective = false;

  SwitchId other(SwitchId s) const { return s == a ? b : a; }
  bool touches(SwitchId s) const { return s == a || s == b; }
};

struct AdjEntry {
  SwitchId neighbor;
  LinkIndex link;
};

/// Undirected multigraph-free network: switches 0..N-1 plus weighted links.
/// Defective links stay in the link list (for reporting) but are excluded
/// from the adjacency used by the protocols.
class NetworkGraph {
 public:
  NetworkGraph() = default;
  explicit NetworkGraph(std::uint32_t switch_count)
      : switch_count_(switch_count) {}

  std::uint32_t switch_count() const { return switch_count_; }
  const std::vector<Link>& links() const { return links_; }
  Link& link(LinkIndex i) { return links_[i]; }
  const Link& link(LinkIndex i) const { return links_[i]; }

  LinkIndex add_link(SwitchId a, SwitchId b, Weight w, bool defective = false) {
    if (a == b) throw IoError("self-loop link " + std::to_string(a));
    if (a >= switch_count_ || b >= switch_count_)
      throw IoError("link endpoint out of range");
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    if (!endpoint_index_.emplace(key, links_.size()).second)
      throw IoError("duplicate link " + std::to_string(a) + "-" + std::to_string(b));
    links_.push_back(Link{key.first, key.second, w, defective});
    adjacency_dirty_ = true;
    return static_cast<LinkIndex>(links_.size() - 1);
  }

  LinkIndex find_link(SwitchId a, SwitchId b) const {
    const auto it =
        endpoint_index_.find({std::min(a, b), std::max(a, b)});
    return it == endpoint_index_.end() ? kNoLink
                                       : static_cast<LinkIndex>(it->second);
  }

  /// Healthy-link adjacency, per switch, sorted by link weight then index.
  const std::vector<std::vector<AdjEntry>>& healthy_adjacency() const {
    if (adjacency_dirty_) rebuild_adjacency();
    return adjacency_;
  }

  std::size_t healthy_link_count() const {
    std::size_t n = 0;
    for (const Link& l : links_)
      if (!l.defective) ++n;
    return n;
  }

  void set_weight(LinkIndex i, Weight w) {
    links_[i].weight = w;
    adjacency_dirty_ = true;
  }

  void set_defective(LinkIndex i, bool defective) {
    links_[i].defective = defective;
    adjacency_dirty_ = true;
  }

  bool weights_unique_among_healthy() const {
    std::set<Weight> seen;
    for (const Link& l : links_) {
      if (l.defective) continue;
      if (!seen.insert(l.weight).second) return false;
    }
    return true;
  }

 private:
  void rebuild_adjacency() const {
    adjacency_.assign(switch_count_, {});
    for (LinkIndex i = 0; i < links_.size(); ++i) {
      const Link& l = links_[i];
      if (l.defective) continue;
      adjacency_[l.a].push_back(AdjEntry{l.b, i});
      adjacency_[l.b].push_back(AdjEntry{l.a, i});
    }
    for (auto& row : adjacency_) {
      std::sort(row.begin(), row.end(), [this](const AdjEntry& x, const AdjEntry& y) {
        if (links_[x.link].weight != links_[y.link].weight)
          return links_[x.link].weight < links_[y.link].weight;
        return x.link < y.link;
      });
    }
    adjacency_dirty_ = false;
  }

  std::uint32_t switch_count_ = 0;
  std::vector<Link> links_;
  std::map<std::pair<SwitchId, SwitchId>, std::size_t> endpoint_index_;
  mutable std::vector<std::vector<AdjEntry>> adjacency_;
  mutable bool adjacency_dirty_ = true;
};

// ---------------------------------------------------------------------------
// Mesh generation and weight distributions
// ---------------------------------------------------------------------------

enum class DistributionKind { Horizontal, Center, Random, Zigzag };

inline const char* to_string(DistributionKind k) {
  switch (k) {
    case DistributionKind::Horizontal: return "horizontal";
    case DistributionKind::Center: return "center";
    case DistributionKind::Random: return "random";
    case DistributionKind::Zigzag: return "zigzag";
  }
  return "?";
}

inline std::optional<DistributionKind> parse_distribution(const std::string& s) {
  if (s == "horizontal") return DistributionKind::Horizontal;
  if (s == "center") return DistributionKind::Center;
  if (s == "random") return DistributionKind::Random;
  if (s == "zigzag") return DistributionKind::Zigzag;
  return std::nullopt;
}

struct WeightDistribution {
  DistributionKind kind = DistributionKind::Random;
  std::uint64_t seed = 0;  // used by Random only
};

/// rows x cols mesh, row-major switch ids, all links healthy with weight 0.
/// Horizontal links first (row by row, left to right), then vertical links
/// (row by row); this is also the canonical link order used elsewhere.
struct Mesh {
  NetworkGraph graph;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;

  SwitchId at(std::uint32_t r, std::uint32_t c) const { return r * cols + c; }
};

inline Mesh generate_mesh(std::uint32_t rows, std::uint32_t cols) {
  TDSR_CHECK(rows >= 1 && cols >= 1, "mesh dimensions must be positive");
  Mesh m;
  m.rows = rows;
  m.cols = cols;
  m.graph = NetworkGraph(rows * cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c + 1 < cols; ++c)
      m.graph.add_link(m.at(r, c), m.at(r, c + 1), 0);
  for (std::uint32_t r = 0; r + 1 < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c)
      m.graph.add_link(m.at(r, c), m.at(r + 1, c), 0);
  return m;
}

namespace detail {

inline LinkIndex mesh_h_link(const Mesh& m, std::uint32_t r, std::uint32_t c) {
  // horizontal links precede vertical ones in generation order
  return r * (m.cols - 1) + c;
}

inline LinkIndex mesh_v_link(const Mesh& m, std::uint32_t r, std::uint32_t c) {
  return m.rows * (m.cols - 1) + r * m.cols + c;
}

}  // namespace detail

/// Assigns the distribution's weights (a permutation of 1..|links|).
/// Geometric distributions require mesh coordinates; Random works anywhere.
inline void assign_weights(Mesh& mesh, const WeightDistribution& dist) {
  NetworkGraph& g = mesh.graph;
  const std::uint32_t rows = mesh.rows, cols = mesh.cols;
  const std::size_t n_links = g.links().size();
  switch (dist.kind) {
    case DistributionKind::Horizontal: {
      // Horizontal links numbered left-to-right then top-to-bottom, strictly
      // below every vertical link; verticals continue row-major.
      Weight w = 1;
      for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c + 1 < cols; ++c)
          g.set_weight(detail::mesh_h_link(mesh, r, c), w++);
      for (std::uint32_t r = 0; r + 1 < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c)
          g.set_weight(detail::mesh_v_link(mesh, r, c), w++);
      break;
    }
    case DistributionKind::Center: {
      // Weights grow with Euclidean distance of the link midpoint from the
      // mesh center; ties broken by endpoint ids.
      const double cr = (rows - 1) / 2.0, cc = (cols - 1) / 2.0;
      std::vector<LinkIndex> order(n_links);
      std::iota(order.begin(), order.end(), 0);
      auto midpoint_dist2 = [&](LinkIndex i) {
        const Link& l = g.link(i);
        const double r1 = l.a / cols, c1 = l.a % cols;
        const double r2 = l.b / cols, c2 = l.b % cols;
        const double mr = (r1 + r2) / 2.0 - cr, mc = (c1 + c2) / 2.0 - cc;
        return mr * mr + mc * mc;
      };
      std::sort(order.begin(), order.end(), [&](LinkIndex x, LinkIndex y) {
        const double dx = midpoint_dist2(x), dy = midpoint_dist2(y);
        if (dx != dy) return dx < dy;
        const Link &lx = g.link(x), &ly = g.link(y);
        if (lx.a != ly.a) return lx.a < ly.a;
        return lx.b < ly.b;
      });
      Weight w = 1;
      for (LinkIndex i : order) g.set_weight(i, w++);
      break;
    }
    case DistributionKind::Random: {
      std::vector<Weight> weights(n_links);
      std::iota(weights.begin(), weights.end(), 1);
      SplitMix64 rng(dist.seed);
      shuffle(weights, rng);
      for (LinkIndex i = 0; i < n_links; ++i) g.set_weight(i, weights[i]);
      break;
    }
    case DistributionKind::Zigzag: {
      // Boustrophedon: row 0 left-to-right, turn vertical at the row end,
      // row 1 right-to-left, ... The serpentine gets weights 1..N-1 so it
      // becomes the MST; remaining verticals follow row-major.
      Weight w = 1;
      std::vector<bool> assigned(n_links, false);
      for (std::uint32_t r = 0; r < rows; ++r) {
        if (r % 2 == 0) {
          for (std::uint32_t c = 0; c + 1 < cols; ++c) {
            g.set_weight(detail::mesh_h_link(mesh, r, c), w++);
            assigned[detail::mesh_h_link(mesh, r, c)] = true;
          }
        } else {
          for (std::uint32_t c = cols - 1; c >= 1; --c) {
            g.set_weight(detail::mesh_h_link(mesh, r, c - 1), w++);
            assigned[detail::mesh_h_link(mesh, r, c - 1)] = true;
          }
        }
        if (r + 1 < rows) {
          const std::uint32_t turn_col = (r % 2 == 0) ? cols - 1 : 0;
          g.set_weight(detail::mesh_v_link(mesh, r, turn_col), w++);
          assigned[detail::mesh_v_link(mesh, r, turn_col)] = true;
        }
      }
      for (LinkIndex i = 0; i < n_links; ++i)
        if (!assigned[i]) g.set_weight(i, w++);
      break;
    }
  }
  TDSR_CHECK(g.weights_unique_among_healthy(), "distribution produced duplicate weights");
}

// ---------------------------------------------------------------------------
// Fault injection, components, weight synthesis
// ---------------------------------------------------------------------------

/// Marks round-half-up(rate_pct/100 * |links|) distinct links defective,
/// chosen uniformly by seed. Links are indexed in canonical order.
inline void inject_faults(NetworkGraph& g, double rate_pct, std::uint64_t seed) {
  TDSR_CHECK(rate_pct >= 0.0 && rate_pct <= 100.0, "fault rate out of range");
  const std::size_t n = g.links().size();
  const std::size_t k =
      static_cast<std::size_t>(std::floor(rate_pct / 100.0 * static_cast<double>(n) + 0.5));
  if (k == 0) return;
  TDSR_CHECK(n >= 1, "cannot inject faults into a linkless graph");
  SplitMix64 rng(seed);
  for (std::size_t idx : sample_indices(n, k, rng))
    g.set_defective(static_cast<LinkIndex>(idx), true);
}

/// Partition of switch ids into healthy-path-connected components, each
/// sorted ascending; components ordered by smallest member.
inline std::vector<std::vector<SwitchId>> connected_components(const NetworkGraph& g) {
  const auto& adj = g.healthy_adjacency();
  std::vector<int> comp(g.switch_count(), -1);
  std::vector<std::vector<SwitchId>> out;
  for (SwitchId s = 0; s < g.switch_count(); ++s) {
    if (comp[s] != -1) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<SwitchId> stack{s};
    comp[s] = id;
    while (!stack.empty()) {
      SwitchId v = stack.back();
      stack.pop_back();
      out.back().push_back(v);
      for (const AdjEntry& e : adj[v]) {
        if (comp[e.neighbor] == -1) {
          comp[e.neighbor] = id;
          stack.push_back(e.neighbor);
        }
      }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

/// Replaces every link weight with a rank-compressed injective function of
/// its endpoint pair (min * N + max), yielding distinct weights 1..|links|.
inline void synthesize_unique_weights(NetworkGraph& g) {
  const std::size_t n = g.links().size();
  std::vector<LinkIndex> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::uint64_t span = g.switch_count();
  auto key = [&](LinkIndex i) {
    const Link& l = g.link(i);
    return static_cast<std::uint64_t>(std::min(l.a, l.b)) * span + std::max(l.a, l.b);
  };
  std::sort(order.begin(), order.end(),
            [&](LinkIndex x, LinkIndex y) { return key(x) < key(y); });
  Weight w = 1;
  for (LinkIndex i : order) g.set_weight(i, w++);
}

// ---------------------------------------------------------------------------
// Topology file format
//   switches <N>
//   link <idA> <idB> <weight> <healthy|defective>
// ---------------------------------------------------------------------------

inline void write_topology(std::ostream& os, const NetworkGraph& g) {
  os << "switches " << g.switch_count() << "\n";
  for (const Link& l : g.links())
    os << "link " << l.a << " " << l.b << " " << l.weight << " "
       << (l.defective ? "defective" : "healthy") << "\n";
}

inline NetworkGraph read_topology(std::istream& is) {
  std::string line;
  NetworkGraph g;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "switches") {
      std::uint32_t n = 0;
      if (!(ls >> n)) throw IoError("bad switches line " + std::to_string(line_no));
      g = NetworkGraph(n);
      have_header = true;
    } else if (tag == "link") {
      if (!have_header) throw IoError("link before switches header");
      SwitchId a, b;
      Weight w;
      std::string status;
      if (!(ls >> a >> b >> w >> status))
        throw IoError("bad link line " + std::to_string(line_no));
      if (status != "healthy" && status != "defective")
        throw IoError("bad link status '" + status + "' on line " + std::to_string(line_no));
      g.add_link(a, b, w, status == "defective");
    } else {
      throw IoError("unknown directive '" + tag + "' on line " + std::to_string(line_no));
    }
  }
  if (!have_header) throw IoError("missing switches header");
  if (!g.weights_unique_among_healthy())
    throw IoError("duplicate weights among healthy links");
  return g;
}

}  // namespace tdsr
