#include "moco/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "moco/error.hpp"

namespace moco {

Vector finite_diff_grad(const ScalarFunction& f, const Vector& x, double h) {
  require(h > 0.0, "finite_diff_grad: h must be positive");
  Vector grad(x.dim());
  Vector probe = x;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw FormatError("finite_diff_grad: non-finite function value at coordinate " +
                        std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(const Vector& a, const Vector& b) {
  require_same_dim(a, b, "max_relative_error");
  double scale = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  if (scale == 0.0) return 0.0;
  return max_abs_diff(a, b) / scale;
}

}  // namespace moco
