#pragma once

#include <cstdint>

#include "moco/vector.hpp"

namespace moco {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  explicit AdamState(std::size_t dim, AdamConfig config = {});

  AdamConfig config;
  Vector m;
  Vector v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update. Descent convention: returns
/// params - lr * m_hat / (sqrt(v_hat) + eps). Negate the gradient to ascend.
Vector adam_step(AdamState& state, const Vector& params, const Vector& grad);

}  // namespace moco
