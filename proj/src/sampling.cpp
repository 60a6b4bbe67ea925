#include "moco/sampling.hpp"

#include <cmath>

#include "moco/error.hpp"
#include "moco/geometry.hpp"

namespace moco {

Vector sample_uniform_ball(Rng& rng, std::size_t dim, const Budget& budget) {
  require(dim >= 1, "sample_uniform_ball: dim must be >= 1");
  const double eps = budget.epsilon;
  Vector out(dim);
  if (eps == 0.0) return out;

  switch (budget.norm) {
    case Norm::Linf:
      for (double& x : out) x = rng.uniform(-eps, eps);
      return out;
    case Norm::L2: {
      double length = 0.0;
      while (length == 0.0) {
        for (double& x : out) x = rng.normal();
        length = norm_p(out, Norm::L2);
      }
      const double radius = eps * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
      out *= radius / length;
      // Rounding can push the radius a hair past eps.
      return project_l2(out, eps);
    }
    case Norm::L1:
      for (double& x : out) x = rng.uniform(-eps, eps);
      return project_l1(out, eps);
  }
  return out;
}

}  // namespace moco
