#pragma once

#include "moco/budget.hpp"
#include "moco/rng.hpp"
#include "moco/vector.hpp"

namespace moco {

/// Random point in the budget ball.
///   Linf: iid uniform coordinates in [-eps, eps]
///   L2:   gaussian direction, radius eps * u^(1/dim)
///   L1:   Linf-box draw projected onto the l1 ball
Vector sample_uniform_ball(Rng& rng, std::size_t dim, const Budget& budget);

}  // namespace moco
