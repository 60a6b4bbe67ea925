#include "moco/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <tuple>

#include <nlohmann/json.hpp>

#include "moco/bezier.hpp"
#include "moco/error.hpp"
#include "moco/geometry.hpp"
#include "moco/pgd.hpp"
#include "moco/sampling.hpp"

namespace moco {

std::strong_ordering operator<=>(const FitnessScore& a, const FitnessScore& b) {
  if (a.success != b.success) return a.success ? std::strong_ordering::greater : std::strong_ordering::less;
  // Lower probability of the true label is fitter.
  if (a.true_label_prob < b.true_label_prob) return std::strong_ordering::greater;
  if (a.true_label_prob > b.true_label_prob) return std::strong_ordering::less;
  return std::strong_ordering::equal;
}

bool operator==(const FitnessScore& a, const FitnessScore& b) { return (a <=> b) == 0; }

std::string_view crossover_name(CrossoverKind kind) {
  return kind == CrossoverKind::Bezier ? "moco-ea" : "traditional";
}

EaConfig::EaConfig(Budget budget_in) : budget(budget_in), mutation_std(0.02 * budget_in.epsilon) {}

void EaConfig::validate() const {
  require(population >= 2, "EaConfig: population must be >= 2");
  require(elites >= 1 && elites < population, "EaConfig: need 1 <= elites < population");
  require(tournament_size >= 2 && tournament_size <= population, "EaConfig: need 2 <= tournament_size <= population");
  require(mutation_prob >= 0.0 && mutation_prob <= 1.0, "EaConfig: mutation_prob must lie in [0,1]");
  require(mutation_std >= 0.0 && mutation_scale >= 0.0, "EaConfig: mutation parameters must be >= 0");
  require(max_generations >= 0, "EaConfig: max_generations must be >= 0");
  require(bezier.steps >= 0 && !bezier.t_list.empty(), "EaConfig: bad Bezier crossover parameters");
  require(!bezier.first_half.empty() && !bezier.second_half.empty(), "EaConfig: Bezier candidates missing");
  for (double t : bezier.first_half) require(t > 0.0 && t < 0.5, "EaConfig: first-half candidates must lie in (0, 0.5)");
  for (double t : bezier.second_half) require(t > 0.5 && t < 1.0, "EaConfig: second-half candidates must lie in (0.5, 1)");
}

FitnessScore score_perturbation(const Classifier& model, const Vector& x, std::size_t label, const Vector& delta,
                                QueryLedger& ledger) {
  ledger.charge_forward();
  const Prediction p = model.forward(perturbed_input(x, delta));
  return {p.predicted() != label, p.probs[label]};
}

std::vector<FitnessScore> evaluate_fitness(std::span<const Vector> deltas, const Vector& x, std::size_t label,
                                           const Classifier& model, QueryLedger& ledger) {
  require(!deltas.empty(), "evaluate_fitness: empty population");
  std::vector<FitnessScore> scores;
  scores.reserve(deltas.size());
  for (const Vector& d : deltas) scores.push_back(score_perturbation(model, x, label, d, ledger));
  return scores;
}

std::vector<std::size_t> select_top(std::span<const FitnessScore> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));
  return order;
}

Vector uniform_crossover_masked(const Vector& p1, const Vector& p2, const std::vector<bool>& take_first,
                                const Budget& budget) {
  require_same_dim(p1, p2, "uniform_crossover");
  require(take_first.size() == p1.dim(), "uniform_crossover: mask length mismatch");
  Vector child(p1.dim());
  for (std::size_t j = 0; j < child.dim(); ++j) child[j] = take_first[j] ? p1[j] : p2[j];
  return project(child, budget);
}

Vector uniform_crossover(const Vector& p1, const Vector& p2, Rng& rng, const Budget& budget) {
  std::vector<bool> take_first(p1.dim());
  for (std::size_t j = 0; j < take_first.size(); ++j) take_first[j] = rng.coin(0.5);
  return uniform_crossover_masked(p1, p2, take_first, budget);
}

Vector mutate(const Vector& delta, const EaConfig& config, Rng& rng) {
  if (!rng.coin(config.mutation_prob)) return delta;
  Vector out = delta;
  for (double& v : out) v += config.mutation_scale * config.mutation_std * rng.normal();
  return project(out, config.budget);
}

std::size_t tournament_winner(std::span<const FitnessScore> scores, int tournament_size, Rng& rng) {
  const std::size_t n = scores.size();
  const auto size = static_cast<std::size_t>(tournament_size);
  require(size >= 1 && n >= size, "tournament_winner: population smaller than tournament");
  // Partial Fisher-Yates draws distinct contestants.
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::size_t winner = 0;
  for (std::size_t i = 0; i < size; ++i) {
    std::swap(pool[i], pool[i + rng.below(n - i)]);
    if (i == 0 || scores[pool[i]] > scores[winner]) winner = pool[i];
  }
  return winner;
}

std::vector<std::pair<std::size_t, std::size_t>> tournament_select(std::span<const FitnessScore> scores,
                                                                   std::size_t count_pairs, int tournament_size,
                                                                   Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(count_pairs);
  for (std::size_t i = 0; i < count_pairs; ++i) {
    const std::size_t a = tournament_winner(scores, tournament_size, rng);
    const std::size_t b = tournament_winner(scores, tournament_size, rng);
    pairs.emplace_back(a, b);
  }
  return pairs;
}

namespace {

Vector curve_point(const Vector& p1, const Vector& p2, const Vector& control, double t, const Budget& budget) {
  const double s = 1.0 - t;
  Vector out(p1.dim());
  for (std::size_t i = 0; i < out.dim(); ++i) out[i] = s * s * p1[i] + 2.0 * s * t * control[i] + t * t * p2[i];
  return project(out, budget);
}

Vector fittest_candidate(const Vector& p1, const Vector& p2, const Vector& control, std::span<const double> ts,
                         const Vector& x, std::size_t label, const Classifier& model, const Budget& budget,
                         QueryLedger& ledger) {
  Vector best;
  FitnessScore best_score;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    Vector candidate = curve_point(p1, p2, control, ts[i], budget);
    const FitnessScore score = score_perturbation(model, x, label, candidate, ledger);
    if (i == 0 || score > best_score) {
      best_score = score;
      best = std::move(candidate);
    }
  }
  return best;
}

}  // namespace

std::pair<Vector, Vector> bezier_crossover(const Vector& p1, const Vector& p2, const Vector& x, std::size_t label,
                                           const Classifier& model, const EaConfig& config, QueryLedger& ledger) {
  require_same_dim(p1, p2, "bezier_crossover");
  const BezierCrossoverConfig& bc = config.bezier;
  Vector control = midpoint(p1, p2);

  for (int step = 0; step < bc.steps; ++step) {
    // Gradient of loss = -sum_t L(f(x + Pi[B(t)]), y) with respect to the control point.
    Vector grad(control.dim());
    for (double t : bc.t_list) {
      const Vector point = curve_point(p1, p2, control, t, config.budget);
      const Vector input = perturbed_input(x, point);
      LossGrad lg = model.loss_and_grad(input, label);
      ledger.charge_gradient();
      mask_box_blocked(lg.grad, input);
      axpy(-2.0 * (1.0 - t) * t, lg.grad, grad);
    }
    if (bc.rule == ControlStep::Gradient) {
      axpy(-bc.step_size, grad, control);
    } else {
      const double length = PgdConfig::standard(config.budget, 0).step_size;
      control -= pgd_step_direction(grad, config.budget.norm, length);
    }
  }

  Vector c1 = fittest_candidate(p1, p2, control, bc.first_half, x, label, model, config.budget, ledger);
  Vector c2 = fittest_candidate(p1, p2, control, bc.second_half, x, label, model, config.budget, ledger);
  return {project(c1, config.budget), project(c2, config.budget)};
}

namespace {

std::vector<FitnessScore> scores_of(const std::vector<Individual>& population) {
  std::vector<FitnessScore> out;
  out.reserve(population.size());
  for (const Individual& ind : population) out.push_back(ind.fitness);
  return out;
}

std::vector<Vector> initial_population(const Classifier& model, const Vector& x, std::size_t label,
                                       const EaConfig& config, Rng& rng, std::uint64_t seed, QueryLedger& ledger) {
  std::vector<Vector> deltas;
  const auto n = static_cast<std::size_t>(config.population);
  for (std::size_t i = 0; i < n; ++i) {
    if (config.init == InitMode::Pgd) {
      const PgdConfig pgd_config = PgdConfig::standard(config.budget, derive_seed(seed, "ea-init-pgd", i));
      deltas.push_back(pgd(model, x, label, pgd_config, ledger).delta);
    } else {
      deltas.push_back(sample_uniform_ball(rng, x.dim(), config.budget));
    }
  }
  return deltas;
}

}  // namespace

AttackResult run_ea(const Classifier& model, const Vector& x, std::size_t label, const EaConfig& config,
                    std::uint64_t seed, QueryLedger& ledger, const GenerationObserver& observer) {
  config.validate();
  require(x.dim() == model.input_dim(), "run_ea: input dimension does not match the model");
  const auto started = std::chrono::steady_clock::now();

  QueryLedger own;
  Rng base(seed);
  Rng init_rng = base.split(0);
  const auto n = static_cast<std::size_t>(config.population);
  const auto k = static_cast<std::size_t>(config.elites);

  std::vector<Individual> population;
  for (Vector& d : initial_population(model, x, label, config, init_rng, seed, own)) {
    population.push_back({std::move(d), {}, true});
  }
  for (Individual& ind : population) {
    ind.fitness = score_perturbation(model, x, label, ind.delta, own);
    ind.stale = false;
  }

  auto best_index = [&]() { return select_top(scores_of(population), 1).front(); };
  Individual best = population[best_index()];
  if (observer) observer({0, population, best.fitness});

  int round = 0;
  while (!best.fitness.success && round < config.max_generations) {
    Rng generation = base.split(static_cast<std::uint64_t>(round) + 1);
    Rng selection_rng = generation.split(0);
    const std::vector<FitnessScore> scores = scores_of(population);
    const auto pairs = tournament_select(scores, n / 2, config.tournament_size, selection_rng);

    std::vector<Individual> offspring;
    offspring.reserve(2 * pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      Rng pair_rng = generation.split(i + 1);
      const Vector& p1 = population[pairs[i].first].delta;
      const Vector& p2 = population[pairs[i].second].delta;
      Vector c1;
      Vector c2;
      if (config.crossover == CrossoverKind::Bezier) {
        std::tie(c1, c2) = bezier_crossover(p1, p2, x, label, model, config, own);
      } else {
        c1 = uniform_crossover(p1, p2, pair_rng, config.budget);
        c2 = uniform_crossover(p1, p2, pair_rng, config.budget);
      }
      offspring.push_back({mutate(c1, config, pair_rng), {}, true});
      offspring.push_back({mutate(c2, config, pair_rng), {}, true});
    }
    for (Individual& child : offspring) {
      child.fitness = score_perturbation(model, x, label, child.delta, own);
      child.stale = false;
    }

    std::vector<Individual> next;
    next.reserve(n);
    for (std::size_t idx : select_top(scores, k)) next.push_back(population[idx]);
    for (std::size_t idx : select_top(scores_of(offspring), n - k)) next.push_back(std::move(offspring[idx]));
    population = std::move(next);
    ++round;
    own.complete_generation();

    const Individual& leader = population[best_index()];
    if (leader.fitness > best.fitness) best = leader;
    if (observer) observer({round, population, best.fitness});
  }

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  own.add_seconds(seconds);
  ledger.merge(own);

  AttackResult result;
  result.success = best.fitness.success;
  result.generations = round;
  result.forwards = own.forwards();
  result.backwards = own.backwards();
  result.seconds = seconds;
  result.seed = seed;
  result.best_delta = std::move(best.delta);
  result.best_fitness = best.fitness;
  return result;
}

std::string attack_result_json(const AttackResult& result, std::size_t sample_id, std::string_view method,
                               const Budget& budget) {
  nlohmann::json doc;
  doc["sample_id"] = sample_id;
  doc["method"] = std::string(method);
  doc["norm"] = std::string(norm_name(budget.norm));
  doc["epsilon"] = budget.epsilon;
  doc["success"] = result.success;
  doc["generations"] = result.generations;
  doc["forwards"] = result.forwards;
  doc["backwards"] = result.backwards;
  doc["seconds"] = result.seconds;
  doc["seed"] = result.seed;
  return doc.dump();
}

}  // namespace moco
