#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "moco/adam.hpp"
#include "moco/budget.hpp"
#include "moco/dataset.hpp"
#include "moco/ledger.hpp"
#include "moco/model.hpp"
#include "moco/vector.hpp"

namespace moco {

/// Quadratic Bezier path between two perturbations:
///   B(t) = (1-t)^2 d1 + 2(1-t)t c + t^2 d2
struct BezierPath {
  BezierPath(Vector delta1, Vector delta2, Vector control, Budget budget);

  Vector delta1;
  Vector delta2;
  Vector control;
  Budget budget;
};

Vector midpoint(const Vector& a, const Vector& b);

/// Unprojected curve point. Throws ContractViolation for t outside [0, 1].
Vector eval_curve(const BezierPath& path, double t);

/// Projected curve point, Pi_eps[B(t)].
Vector eval_projected(const BezierPath& path, double t);

/// The segment (1-t) d1 + t d2, expressed as a Bezier path with midpoint control.
BezierPath linear_path(const Vector& delta1, const Vector& delta2, const Budget& budget);

std::string path_to_json(const BezierPath& path);
BezierPath path_from_json(const std::string& text);

enum class Setting { A, B, C };

std::string_view setting_name(Setting setting);
Setting parse_setting(std::string_view text);

/// Weighted curve objective over main and auxiliary images. The loss at t is
///   sum_k w_k L(f(clip(x_k + Pi[B(t)])), y_k) / sum_k w_k
struct CurveObjective {
  /// Validates the per-setting structure: A has one main case, B two with
  /// equal labels, C two with distinct labels; w_main > w_aux >= 0.
  static CurveObjective make(Setting setting, std::vector<Sample> main_cases, std::vector<Sample> aux_cases,
                             double w_main = 1.0, double w_aux = 0.5);

  Setting setting = Setting::A;
  std::vector<Sample> main_cases;
  std::vector<Sample> aux_cases;
  double w_main = 1.0;
  double w_aux = 0.5;

  double total_weight() const;
};

/// One forward per case.
double path_loss(const CurveObjective& objective, const BezierPath& path, double t, const Classifier& model,
                 QueryLedger& ledger);

struct OptimizeConfig {
  int iterations = 30;
  int t_samples_per_iter = 20;
  // When non-empty, used every iteration instead of random draws.
  std::vector<double> fixed_t;
  AdamConfig adam{};
  std::uint64_t seed = 0;
};

using OptimizeObserver = std::function<void(int iterations_done, const BezierPath& path)>;

/// Adam ascent on the Monte-Carlo estimate of E_t[path_loss] with respect to
/// the control point, starting from the midpoint of the endpoints. The
/// gradient is carried back through the projection by project_vjp; through
/// the box clip it is masked where the input is pinned at a bound
/// (mask_box_blocked). Charges
/// one forward and one backward per (t, case). Endpoints are returned untouched.
BezierPath optimize_control(const CurveObjective& objective, const BezierPath& path, const OptimizeConfig& config,
                            const Classifier& model, QueryLedger& ledger, const OptimizeObserver& observer = {});

struct PathPoint {
  double t = 0.0;
  Vector point;  // projected
};

/// t_i = 0.02 + i * 0.96 / (count - 1), i = 0..count-1.
std::vector<double> evaluation_grid(std::size_t count);
std::vector<PathPoint> sample_path_points(const BezierPath& path, std::size_t count);

struct ConnectivityReport {
  std::size_t points = 0;
  std::size_t cases = 0;
  // Percentages of sampled points.
  std::vector<double> per_case_asr;
  double asr_both = 0.0;
  double asr_avg = 0.0;
  double mean_loss = 0.0;
  double min_loss = 0.0;
  // hits[point][case]
  std::vector<std::vector<bool>> hits;

  std::optional<double> asr1() const;
  std::optional<double> asr2() const;
};

/// One forward per (point, case).
ConnectivityReport evaluate_connectivity(const BezierPath& path, const std::vector<Sample>& cases, std::size_t count,
                                         const Classifier& model, QueryLedger& ledger);

}  // namespace moco
