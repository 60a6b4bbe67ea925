#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moco/bezier.hpp"
#include "moco/budget.hpp"
#include "moco/dataset.hpp"
#include "moco/evolution.hpp"
#include "moco/model.hpp"
#include "moco/report.hpp"

namespace moco {

/// Radius per norm.
struct BudgetTable {
  double linf = 0.05;
  double l2 = 1.2;
  double l1 = 20.0;

  Budget budget(Norm norm) const;
};

struct ExperimentSpec {
  std::vector<Setting> settings{Setting::A, Setting::B, Setting::C};
  std::vector<Norm> norms{Norm::Linf, Norm::L2, Norm::L1};
  BudgetTable epsilons;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  // Curve experiments.
  std::size_t cases = 25;                 // connectivity and transfer cases per (setting, norm)
  std::size_t cases_per_repetition = 5;   // aux ablation and convergence
  std::size_t repetitions = 5;
  std::size_t eval_images = 40;           // unseen test images per case
  std::size_t points = 50;                // evaluation points per curve
  std::size_t connect_aux = 0;
  std::size_t transfer_aux = 10;
  std::vector<std::size_t> aux_counts{0, 5, 10, 15, 20, 25};
  std::vector<int> epochs_list{10, 20, 30, 40, 50};
  std::vector<std::size_t> sample_counts{50, 100};
  bool linear = false;
  int pgd_restarts = 5;
  OptimizeConfig optimize;
  double w_main = 1.0;
  double w_aux = 0.5;

  // Evolutionary experiments.
  std::size_t ea_samples = 30;
  int population = 30;
  int elites = 5;
  int tournament_size = 3;
  double mutation_prob = 0.2;
  double mutation_rel_std = 0.02;  // times epsilon
  int max_generations = 1000;
  ControlStep control_step = ControlStep::Steepest;
  int quantization_levels = 5;
  bool timing = false;

  void validate() const;
  EaConfig ea_config(Norm norm, CrossoverKind kind) const;
};

/// Correctly classified train / test indices and the auxiliary pool, by class.
struct Pools {
  std::vector<std::vector<std::size_t>> train;
  std::vector<std::vector<std::size_t>> test;
  std::vector<std::vector<std::size_t>> aux;

  static Pools build(const Classifier& model, const Dataset& data);
};

/// Images behind one curve: the main images, an ordered auxiliary list
/// (the first n form the n-image set, so sets are nested), and unseen test
/// images. Labels follow the setting's policy: A and B draw everything from
/// the main class, C balances the two main classes.
struct CaseImages {
  std::vector<Sample> main;
  std::vector<Sample> aux;
  std::vector<Sample> eval;
};

CaseImages draw_case(Setting setting, const Dataset& data, const Pools& pools, Rng& rng, std::size_t aux_count,
                     std::size_t eval_count);

/// Per-curve transfer statistics on a set of test images (percentages,
/// except avg_points which counts points).
struct TransferStats {
  double endpoint_avg = 0.0;
  double path_success = 0.0;
  double rescued = 0.0;
  double avg_points = 0.0;
  // Raw flags: endpoint_hit[i] = either endpoint fools image i.
  std::vector<bool> endpoint_hit;
  std::vector<bool> path_hit;
};

TransferStats transfer_stats(const BezierPath& path, const std::vector<Sample>& images,
                             const std::vector<double>& ts, const Classifier& model, QueryLedger& ledger);

/// Table "connectivity": Setting, Norm, Path -> ASR1, ASR2, ASR Both, ASR Avg.
Report run_connectivity(const ExperimentSpec& spec, const Classifier& model, const Dataset& data);
/// Table "transfer": Setting, Norm -> Endp. Avg, Path Succ., Imgs Resc., Avg. pts.
Report run_transfer(const ExperimentSpec& spec, const Classifier& model, const Dataset& data);
/// Table "aux": Setting, Norm, Aux -> Endp. Avg, Path Succ., Imp., Rescue Rate.
Report run_aux_ablation(const ExperimentSpec& spec, const Classifier& model, const Dataset& data);
/// Tables "coverage" (Setting, Norm, Aux, Epochs -> Coverage) and
/// "density" (Setting, Norm, Aux, Points -> Coverage, Coverage/pt).
Report run_convergence(const ExperimentSpec& spec, const Classifier& model, const Dataset& data);
/// Tables "compare" (Norm, Method -> Succ. rate, Avg. gen., Avg. queries,
/// Avg. time) and "improvement" (Norm -> Succ. gain, Gen. reduction,
/// Query reduction, Time reduction).
Report run_ea_compare(const ExperimentSpec& spec, const Classifier& model, const Dataset& data);
/// Table "obfuscated": Defense, Norm, Method -> ASR. The model passed in is
/// the undefended network.
Report run_obfuscated(const ExperimentSpec& spec, const Mlp& model, const Dataset& data);

}  // namespace moco
