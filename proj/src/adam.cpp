#include "moco/adam.hpp"

#include <cmath>

#include "moco/error.hpp"

namespace moco {

AdamState::AdamState(std::size_t dim, AdamConfig config_in)
    : config(config_in), m(dim), v(dim) {
  require(config.lr > 0.0, "AdamState: lr must be positive");
  require(config.beta1 > 0.0 && config.beta1 < 1.0, "AdamState: beta1 must lie in (0,1)");
  require(config.beta2 > 0.0 && config.beta2 < 1.0, "AdamState: beta2 must lie in (0,1)");
  require(config.eps > 0.0, "AdamState: eps must be positive");
}

Vector adam_step(AdamState& state, const Vector& params, const Vector& grad) {
  require_same_dim(params, grad, "adam_step");
  require_same_dim(params, state.m, "adam_step");

  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  Vector out = params;
  for (std::size_t i = 0; i < params.dim(); ++i) {
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grad[i];
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    out[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
  return out;
}

}  // namespace moco
