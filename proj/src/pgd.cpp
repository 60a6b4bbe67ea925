#include "moco/pgd.hpp"

#include <cmath>

#include "moco/error.hpp"
#include "moco/geometry.hpp"
#include "moco/rng.hpp"
#include "moco/sampling.hpp"

namespace moco {

PgdConfig::PgdConfig(Budget budget_in, int steps_in, double step_size_in, bool random_start_in,
                     std::uint64_t seed_in)
    : budget(budget_in), steps(steps_in), step_size(step_size_in), random_start(random_start_in), seed(seed_in) {
  require(steps >= 1, "PgdConfig: steps must be >= 1");
  require(step_size > 0.0 || budget.epsilon == 0.0, "PgdConfig: step_size must be positive");
}

PgdConfig PgdConfig::standard(const Budget& budget, std::uint64_t seed) {
  double divisor = 4.0;
  if (budget.norm == Norm::L2) divisor = 5.0;
  if (budget.norm == Norm::L1) divisor = 10.0;
  return PgdConfig(budget, 40, budget.epsilon / divisor, true, seed);
}

Vector pgd_step_direction(const Vector& grad, Norm norm, double step_size) {
  Vector step(grad.dim());
  switch (norm) {
    case Norm::Linf:
      for (std::size_t i = 0; i < grad.dim(); ++i) {
        if (grad[i] > 0.0) step[i] = step_size;
        else if (grad[i] < 0.0) step[i] = -step_size;
      }
      break;
    case Norm::L2: {
      const double length = norm_p(grad, Norm::L2);
      if (length > 0.0) step = (step_size / length) * grad;
      break;
    }
    case Norm::L1: {
      // Steepest single coordinate; ties go to the lowest index.
      std::size_t best = 0;
      double best_mag = 0.0;
      for (std::size_t i = 0; i < grad.dim(); ++i) {
        if (std::abs(grad[i]) > best_mag) {
          best_mag = std::abs(grad[i]);
          best = i;
        }
      }
      if (best_mag > 0.0) step[best] = std::copysign(step_size, grad[best]);
      break;
    }
  }
  return step;
}

PgdResult pgd(const Classifier& model, const Vector& x, std::size_t label, const PgdConfig& config,
              QueryLedger& ledger, const PgdObserver& observer) {
  require(x.dim() == model.input_dim(), "pgd: input dimension does not match the model");
  require(label < model.class_count(), "pgd: label out of range");

  Vector delta(x.dim());
  if (config.random_start) {
    Rng rng(config.seed);
    delta = sample_uniform_ball(rng, x.dim(), config.budget);
  }

  for (int step = 0; step < config.steps; ++step) {
    const Vector input = perturbed_input(x, delta);
    LossGrad lg = model.loss_and_grad(input, label);
    ledger.charge_gradient();
    mask_box_blocked(lg.grad, input);
    delta += pgd_step_direction(lg.grad, config.budget.norm, config.step_size);
    delta = project(delta, config.budget);
    // Keep x + delta inside the box; this only shrinks |delta_i|, so the
    // iterate stays in the ball.
    delta = perturbed_input(x, delta) - x;
    if (observer) observer(step, delta);
  }

  PgdResult result;
  ledger.charge_forward();
  result.success = model.forward(perturbed_input(x, delta)).predicted() != label;
  result.delta = std::move(delta);
  return result;
}

PgdResult pgd_with_restarts(const Classifier& model, const Vector& x, std::size_t label,
                            const PgdConfig& config, QueryLedger& ledger, int max_attempts) {
  require(max_attempts >= 1, "pgd_with_restarts: max_attempts must be >= 1");
  PgdResult result;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    PgdConfig run = config;
    if (attempt > 0) run.seed = derive_seed(config.seed, "pgd-restart", static_cast<std::uint64_t>(attempt));
    result = pgd(model, x, label, run, ledger);
    result.attempts = attempt + 1;
    if (result.success) break;
  }
  return result;
}

EndpointPair pgd_endpoint_pair(const Classifier& model, const Vector& x, std::size_t label,
                               const PgdConfig& config, std::pair<std::uint64_t, std::uint64_t> seeds,
                               QueryLedger& ledger, int max_attempts) {
  PgdConfig first = config;
  first.seed = seeds.first;
  PgdConfig second = config;
  second.seed = seeds.second;
  EndpointPair pair;
  pair.first = pgd_with_restarts(model, x, label, first, ledger, max_attempts);
  pair.second = pgd_with_restarts(model, x, label, second, ledger, max_attempts);
  return pair;
}

}  // namespace moco
