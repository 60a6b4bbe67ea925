#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "moco/budget.hpp"
#include "moco/ledger.hpp"
#include "moco/model.hpp"
#include "moco/rng.hpp"
#include "moco/vector.hpp"

namespace moco {

/// Lexicographic fitness: any successful perturbation beats any unsuccessful
/// one; within the same success status, lower true-label probability wins.
/// Larger compares as fitter.
struct FitnessScore {
  bool success = false;
  double true_label_prob = 1.0;

  friend std::strong_ordering operator<=>(const FitnessScore& a, const FitnessScore& b);
  friend bool operator==(const FitnessScore& a, const FitnessScore& b);
};

struct Individual {
  Vector delta;
  FitnessScore fitness;
  bool stale = true;
};

enum class CrossoverKind { Uniform, Bezier };
enum class InitMode { Random, Pgd };

std::string_view crossover_name(CrossoverKind kind);

/// Gradient: control -= step_size * grad (raw step).
/// Steepest: norm-matched steepest-ascent step of the PGD step length for
/// the budget, independent of the gradient's scale.
enum class ControlStep { Gradient, Steepest };

struct BezierCrossoverConfig {
  int steps = 5;                                   // tau
  std::vector<double> t_list{0.25, 0.5, 0.75};     // s points per step
  std::vector<double> first_half{0.125, 0.25, 0.375};
  std::vector<double> second_half{0.625, 0.75, 0.875};
  ControlStep rule = ControlStep::Steepest;
  double step_size = 0.01;                         // used by ControlStep::Gradient only

  std::size_t candidate_count() const { return first_half.size() + second_half.size(); }
};

struct EaConfig {
  explicit EaConfig(Budget budget);

  void validate() const;

  Budget budget;
  int population = 30;
  int elites = 5;
  int tournament_size = 3;
  double mutation_prob = 0.2;
  double mutation_std;  // defaults to 0.02 * epsilon
  double mutation_scale = 1.0;
  int max_generations = 1000;
  InitMode init = InitMode::Random;
  CrossoverKind crossover = CrossoverKind::Bezier;
  BezierCrossoverConfig bezier;
};

/// One forward.
FitnessScore score_perturbation(const Classifier& model, const Vector& x, std::size_t label, const Vector& delta,
                                QueryLedger& ledger);

/// One forward per perturbation.
std::vector<FitnessScore> evaluate_fitness(std::span<const Vector> deltas, const Vector& x, std::size_t label,
                                           const Classifier& model, QueryLedger& ledger);

/// Indices of the k fittest scores, fittest first; ties keep index order.
std::vector<std::size_t> select_top(std::span<const FitnessScore> scores, std::size_t k);

/// Coordinate j comes from p1 where take_first[j], else from p2; then projected.
Vector uniform_crossover_masked(const Vector& p1, const Vector& p2, const std::vector<bool>& take_first,
                                const Budget& budget);
Vector uniform_crossover(const Vector& p1, const Vector& p2, Rng& rng, const Budget& budget);

/// With probability mutation_prob adds mutation_scale * N(0, mutation_std^2 I)
/// and projects; otherwise returns delta unchanged.
Vector mutate(const Vector& delta, const EaConfig& config, Rng& rng);

/// Fittest of tournament_size distinct uniformly drawn individuals; among
/// equal scores the earliest drawn wins.
std::size_t tournament_winner(std::span<const FitnessScore> scores, int tournament_size, Rng& rng);

std::vector<std::pair<std::size_t, std::size_t>> tournament_select(std::span<const FitnessScore> scores,
                                                                   std::size_t count_pairs, int tournament_size,
                                                                   Rng& rng);

/// Optimises a short Bezier path between the parents (tau plain gradient
/// steps over the fixed t list, projected points) and returns the fittest
/// candidate from each half of the curve. Charges tau*s forwards + tau*s
/// backwards + candidate_count forwards.
std::pair<Vector, Vector> bezier_crossover(const Vector& p1, const Vector& p2, const Vector& x, std::size_t label,
                                           const Classifier& model, const EaConfig& config, QueryLedger& ledger);

struct GenerationSnapshot {
  int generation = 0;  // completed crossover rounds
  std::span<const Individual> population;
  FitnessScore best;
};

using GenerationObserver = std::function<void(const GenerationSnapshot&)>;

struct AttackResult {
  bool success = false;
  int generations = 0;
  std::uint64_t forwards = 0;
  std::uint64_t backwards = 0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
  Vector best_delta;
  FitnessScore best_fitness;
};

/// Evolutionary attack. With CrossoverKind::Bezier this is the mode
/// connectivity attack; with Uniform it is the classic baseline. Fitness is
/// cached: the initial population costs N forwards and every round costs one
/// forward per offspring plus the crossover's own queries.
AttackResult run_ea(const Classifier& model, const Vector& x, std::size_t label, const EaConfig& config,
                    std::uint64_t seed, QueryLedger& ledger, const GenerationObserver& observer = {});

/// One JSON-lines record: {sample_id, method, norm, epsilon, success,
/// generations, forwards, backwards, seconds, seed}.
std::string attack_result_json(const AttackResult& result, std::size_t sample_id, std::string_view method,
                               const Budget& budget);

}  // namespace moco
