#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "moco/budget.hpp"
#include "moco/ledger.hpp"
#include "moco/model.hpp"
#include "moco/vector.hpp"

namespace moco {

struct PgdConfig {
  PgdConfig(Budget budget, int steps, double step_size, bool random_start, std::uint64_t seed);

  /// 40 steps with alpha = eps/4 (linf), eps/5 (l2), eps/10 (l1).
  static PgdConfig standard(const Budget& budget, std::uint64_t seed);

  Budget budget;
  int steps;
  double step_size;
  bool random_start;
  std::uint64_t seed;
};

struct PgdResult {
  Vector delta;
  bool success = false;
  int attempts = 1;
};

/// Per-iterate observer; receives the projected perturbation after each step.
using PgdObserver = std::function<void(int step, const Vector& delta)>;

/// Projected gradient ascent on the cross-entropy loss. Success is judged on
/// clip_box(x + delta). Charges one forward + one backward per step and one
/// final forward.
PgdResult pgd(const Classifier& model, const Vector& x, std::size_t label, const PgdConfig& config,
              QueryLedger& ledger, const PgdObserver& observer = {});

/// The norm-specific ascent direction scaled by the step size; zero when the
/// gradient vanishes.
Vector pgd_step_direction(const Vector& grad, Norm norm, double step_size);

/// Re-runs PGD with reseeded random starts until it fools the model or
/// max_attempts runs have been spent. Attempt 0 uses config.seed.
PgdResult pgd_with_restarts(const Classifier& model, const Vector& x, std::size_t label,
                            const PgdConfig& config, QueryLedger& ledger, int max_attempts = 5);

struct EndpointPair {
  PgdResult first;
  PgdResult second;

  bool ok() const { return first.success && second.success; }
};

/// Two PGD runs on the same input from different random starts.
EndpointPair pgd_endpoint_pair(const Classifier& model, const Vector& x, std::size_t label,
                               const PgdConfig& config, std::pair<std::uint64_t, std::uint64_t> seeds,
                               QueryLedger& ledger, int max_attempts = 5);

}  // namespace moco
