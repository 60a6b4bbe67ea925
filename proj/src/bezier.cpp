#include "moco/bezier.hpp"

#include <algorithm>
#include <limits>

#include <nlohmann/json.hpp>

#include "moco/error.hpp"
#include "moco/geometry.hpp"
#include "moco/rng.hpp"

namespace moco {

BezierPath::BezierPath(Vector d1, Vector d2, Vector c, Budget b)
    : delta1(std::move(d1)), delta2(std::move(d2)), control(std::move(c)), budget(b) {
  require_same_dim(delta1, delta2, "BezierPath");
  require_same_dim(delta1, control, "BezierPath");
}

Vector midpoint(const Vector& a, const Vector& b) { return 0.5 * (a + b); }

Vector eval_curve(const BezierPath& path, double t) {
  require(t >= 0.0 && t <= 1.0, "eval_curve: t must lie in [0, 1]");
  if (t == 0.0) return path.delta1;
  if (t == 1.0) return path.delta2;
  const double s = 1.0 - t;
  const double a = s * s;
  const double b = 2.0 * s * t;
  const double c = t * t;
  Vector out(path.delta1.dim());
  for (std::size_t i = 0; i < out.dim(); ++i) {
    out[i] = a * path.delta1[i] + b * path.control[i] + c * path.delta2[i];
  }
  return out;
}

Vector eval_projected(const BezierPath& path, double t) { return project(eval_curve(path, t), path.budget); }

BezierPath linear_path(const Vector& delta1, const Vector& delta2, const Budget& budget) {
  require_same_dim(delta1, delta2, "linear_path");
  return BezierPath(delta1, delta2, midpoint(delta1, delta2), budget);
}

std::string path_to_json(const BezierPath& path) {
  nlohmann::json doc;
  doc["delta1"] = path.delta1.raw();
  doc["delta2"] = path.delta2.raw();
  doc["control"] = path.control.raw();
  doc["norm"] = std::string(norm_name(path.budget.norm));
  doc["epsilon"] = path.budget.epsilon;
  return doc.dump();
}

BezierPath path_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    return BezierPath(Vector(doc.at("delta1").get<std::vector<double>>()),
                      Vector(doc.at("delta2").get<std::vector<double>>()),
                      Vector(doc.at("control").get<std::vector<double>>()),
                      Budget(parse_norm(doc.at("norm").get<std::string>()), doc.at("epsilon").get<double>()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("path JSON: ") + e.what());
  }
}

std::string_view setting_name(Setting setting) {
  switch (setting) {
    case Setting::A: return "A";
    case Setting::B: return "B";
    case Setting::C: return "C";
  }
  return "?";
}

Setting parse_setting(std::string_view text) {
  if (text == "A" || text == "a") return Setting::A;
  if (text == "B" || text == "b") return Setting::B;
  if (text == "C" || text == "c") return Setting::C;
  throw FormatError("unknown setting '" + std::string(text) + "' (expected A, B or C)");
}

CurveObjective CurveObjective::make(Setting setting, std::vector<Sample> main_cases, std::vector<Sample> aux_cases,
                                    double w_main, double w_aux) {
  switch (setting) {
    case Setting::A:
      require(main_cases.size() == 1, "CurveObjective: setting A needs exactly one main case");
      break;
    case Setting::B:
      require(main_cases.size() == 2 && main_cases[0].label == main_cases[1].label,
              "CurveObjective: setting B needs two main cases with equal labels");
      break;
    case Setting::C:
      require(main_cases.size() == 2 && main_cases[0].label != main_cases[1].label,
              "CurveObjective: setting C needs two main cases with distinct labels");
      break;
  }
  require(w_aux >= 0.0 && w_main > w_aux, "CurveObjective: weights must satisfy w_main > w_aux >= 0");
  return CurveObjective{setting, std::move(main_cases), std::move(aux_cases), w_main, w_aux};
}

double CurveObjective::total_weight() const {
  return w_main * static_cast<double>(main_cases.size()) + w_aux * static_cast<double>(aux_cases.size());
}

namespace {

template <typename Fn>
void for_each_weighted_case(const CurveObjective& objective, Fn&& fn) {
  const double total = objective.total_weight();
  require(total > 0.0, "CurveObjective: total weight must be positive");
  for (const Sample& s : objective.main_cases) fn(s, objective.w_main / total);
  if (objective.w_aux > 0.0) {
    for (const Sample& s : objective.aux_cases) fn(s, objective.w_aux / total);
  }
}

}  // namespace

double path_loss(const CurveObjective& objective, const BezierPath& path, double t, const Classifier& model,
                 QueryLedger& ledger) {
  const Vector point = eval_projected(path, t);
  double loss = 0.0;
  for_each_weighted_case(objective, [&](const Sample& s, double weight) {
    ledger.charge_forward();
    loss += weight * model.loss(perturbed_input(s.x, point), s.label);
  });
  return loss;
}

BezierPath optimize_control(const CurveObjective& objective, const BezierPath& path, const OptimizeConfig& config,
                            const Classifier& model, QueryLedger& ledger, const OptimizeObserver& observer) {
  require(config.iterations >= 0, "optimize_control: iterations must be >= 0");
  require(!config.fixed_t.empty() || config.t_samples_per_iter >= 1,
          "optimize_control: need at least one t sample per iteration");

  BezierPath current(path.delta1, path.delta2, midpoint(path.delta1, path.delta2), path.budget);
  AdamState adam(current.control.dim(), config.adam);
  Rng rng(config.seed);
  std::vector<double> ts = config.fixed_t;

  for (int it = 0; it < config.iterations; ++it) {
    if (config.fixed_t.empty()) {
      ts.resize(static_cast<std::size_t>(config.t_samples_per_iter));
      for (double& t : ts) t = rng.uniform();
    }
    Vector ascent(current.control.dim());
    for (double t : ts) {
      const Vector raw = eval_curve(current, t);
      const Vector point = project(raw, current.budget);
      const double chain = 2.0 * (1.0 - t) * t;  // dB/dc
      Vector through(raw.dim());
      for_each_weighted_case(objective, [&](const Sample& s, double weight) {
        const Vector input = perturbed_input(s.x, point);
        LossGrad lg = model.loss_and_grad(input, s.label);
        ledger.charge_gradient();
        mask_box_blocked(lg.grad, input);
        axpy(weight, lg.grad, through);
      });
      axpy(chain, project_vjp(raw, through, current.budget), ascent);
    }
    ascent *= -1.0 / static_cast<double>(ts.size());
    current.control = adam_step(adam, current.control, ascent);
    if (observer) observer(it + 1, current);
  }
  return current;
}

std::vector<double> evaluation_grid(std::size_t count) {
  require(count >= 2, "evaluation_grid: count must be >= 2");
  std::vector<double> ts(count);
  for (std::size_t i = 0; i < count; ++i) {
    ts[i] = 0.02 + static_cast<double>(i) * (0.96 / static_cast<double>(count - 1));
  }
  return ts;
}

std::vector<PathPoint> sample_path_points(const BezierPath& path, std::size_t count) {
  std::vector<PathPoint> points;
  for (double t : evaluation_grid(count)) points.push_back({t, eval_projected(path, t)});
  return points;
}

std::optional<double> ConnectivityReport::asr1() const {
  if (cases < 2) return std::nullopt;
  return per_case_asr[0];
}

std::optional<double> ConnectivityReport::asr2() const {
  if (cases < 2) return std::nullopt;
  return per_case_asr[1];
}

ConnectivityReport evaluate_connectivity(const BezierPath& path, const std::vector<Sample>& cases, std::size_t count,
                                         const Classifier& model, QueryLedger& ledger) {
  require(!cases.empty(), "evaluate_connectivity: no cases");
  ConnectivityReport report;
  report.points = count;
  report.cases = cases.size();
  report.per_case_asr.assign(cases.size(), 0.0);
  report.min_loss = std::numeric_limits<double>::infinity();

  std::size_t both = 0;
  double loss_sum = 0.0;
  for (const PathPoint& p : sample_path_points(path, count)) {
    std::vector<bool> row(cases.size());
    double point_loss = 0.0;
    for (std::size_t k = 0; k < cases.size(); ++k) {
      ledger.charge_forward();
      const Prediction pred = model.forward(perturbed_input(cases[k].x, p.point));
      row[k] = pred.predicted() != cases[k].label;
      if (row[k]) report.per_case_asr[k] += 1.0;
      point_loss += cross_entropy(pred.logits, cases[k].label) / static_cast<double>(cases.size());
    }
    if (std::all_of(row.begin(), row.end(), [](bool b) { return b; })) ++both;
    loss_sum += point_loss;
    report.min_loss = std::min(report.min_loss, point_loss);
    report.hits.push_back(std::move(row));
  }

  const double n = static_cast<double>(count);
  for (double& a : report.per_case_asr) a = 100.0 * a / n;
  report.asr_both = 100.0 * static_cast<double>(both) / n;
  if (cases.size() == 1) {
    report.asr_avg = report.asr_both;
  } else {
    double sum = 0.0;
    for (double a : report.per_case_asr) sum += a;
    report.asr_avg = sum / static_cast<double>(cases.size());
  }
  report.mean_loss = loss_sum / n;
  return report;
}

}  // namespace moco
