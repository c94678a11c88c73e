#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace tdsr {

/// A protocol automaton or extraction pass observed something the design
/// rules out (e.g. CONNECT on an internal link, inconsistent link classes).
class ProtocolError : public std::logic_error {
 public:
  explicit ProtocolError(const std::string& what) : std::logic_error(what) {}
};

/// The engine hit max_cycles before quiescence; carries a state snapshot.
class SimTimeout : public std::runtime_error {
 public:
  SimTimeout(const std::string& what, std::string diagnostic)
      : std::runtime_error(what), diagnostic_(std::move(diagnostic)) {}
  const std::string& diagnostic() const { return diagnostic_; }

 private:
  std::string diagnostic_;
};

/// Malformed topology files, segmentation dumps, CSV rows.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void check_stream(std::ostringstream&) {}
template <typename T, typename... Rest>
void check_stream(std::ostringstream& oss, const T& v, const Rest&... rest) {
  oss << v;
  check_stream(oss, rest...);
}
}  // namespace detail

// Always-on invariant check; never compiled out, so Release runs keep the
// same failure behavior as Debug runs.
#define TDSR_CHECK(cond, ...)                             \
  do {                                                    \
    if (!(cond)) {                                        \
      std::ostringstream oss_;                            \
      oss_ << "invariant failed (" #cond "): ";           \
      ::tdsr::detail::check_stream(oss_, __VA_ARGS__);    \
      throw ::tdsr::ProtocolError(oss_.str());            \
    }                                                     \
  } while (false)

}  // namespace tdsr
