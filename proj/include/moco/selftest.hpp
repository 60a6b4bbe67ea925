#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace moco {

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestOptions {
  std::uint64_t seed = 0;
  // Test hook: swap the l1 projection for radial scaling, which is feasible
  // and idempotent but not the nearest point.
  bool corrupt_l1_projection = false;
};

/// Fast invariant suite: input gradients, projection oracles, Bezier
/// identities, Adam examples and query-ledger arithmetic.
std::vector<SelftestCheck> run_selftest(const SelftestOptions& options);

}  // namespace moco
