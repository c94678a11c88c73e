// Extended scale profile: 32x32 and 64x64 runs with full verification.
// Not registered with ctest; run the binary directly when needed. The
// 64x64 zigzag case is the quadratic worst case and takes a minute or two.

#include <chrono>
#include <iostream>

#include "tdsr/simulation.hpp"
#include "tdsr/topology.hpp"

using namespace tdsr;

namespace {

int run_one(std::uint32_t n, DistributionKind kind) {
  const auto t0 = std::chrono::steady_clock::now();
  Mesh m = generate_mesh(n, n);
  assign_weights(m, {kind, 12345});
  const TdsrRun run = run_tdsr(m.graph);
  const auto problems = verify_run(m.graph, run);
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::cout << n << "x" << n << " " << to_string(kind)
            << ": cycles=" << run.clock.cycle
            << " segments=" << run.segmentation.segments.size()
            << " expansions=" << run.segmentation.num_expansions()
            << " depth=" << run.mst_depth << " wall=" << dt << "s"
            << (problems.empty() ? "" : " VIOLATIONS") << "\n";
  for (const auto& p : problems) std::cout << "  " << p << "\n";
  return problems.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  const bool full = argc > 1 && std::string(argv[1]) == "--full";
  int bad = 0;
  for (auto kind : {DistributionKind::Horizontal, DistributionKind::Center,
                    DistributionKind::Random, DistributionKind::Zigzag})
    bad += run_one(32, kind);
  for (auto kind : {DistributionKind::Horizontal, DistributionKind::Center,
                    DistributionKind::Random})
    bad += run_one(64, kind);
  if (full) bad += run_one(64, DistributionKind::Zigzag);
  return bad == 0 ? 0 : 1;
}
