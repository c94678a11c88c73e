#pragma once

#include <cstdint>
#include <ostream>

namespace tdsr {

/// Closed integer interval [a, b] assigned to a switch: a is its pre-order
/// index in the rooted MST, b the maximum index in its subtree. a == b at
/// leaves. Strict containment of intervals decides strict tree ancestry.
struct IntervalLabel {
  std::uint32_t a = 0;
  std::uint32_t b = 0;

  friend bool operator==(const IntervalLabel& x, const IntervalLabel& y) {
    return x.a == y.a && x.b == y.b;
  }
  friend bool operator!=(const IntervalLabel& x, const IntervalLabel& y) {
    return !(x == y);
  }
  friend std::ostream& operator<<(std::ostream& os, const IntervalLabel& l) {
    return os << "[" << l.a << "," << l.b << "]";
  }
};

/// True iff anc is a strict ancestor of desc (labels from one labeling run).
inline bool is_ancestor(const IntervalLabel& anc, const IntervalLabel& desc) {
  return desc.a >= anc.a && desc.b <= anc.b && !(anc == desc);
}

/// True iff x is a common ancestor of both u and v.
inline bool is_common_ancestor(const IntervalLabel& x, const IntervalLabel& u,
                               const IntervalLabel& v) {
  return is_ancestor(x, u) && is_ancestor(x, v);
}

}  // namespace tdsr
