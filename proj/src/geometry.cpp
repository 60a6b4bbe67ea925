#include "moco/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "moco/error.hpp"

namespace moco {

std::string_view norm_name(Norm norm) {
  switch (norm) {
    case Norm::Linf: return "linf";
    case Norm::L2: return "l2";
    case Norm::L1: return "l1";
  }
  return "unknown";
}

Norm parse_norm(std::string_view text) {
  if (text == "linf") return Norm::Linf;
  if (text == "l2") return Norm::L2;
  if (text == "l1") return Norm::L1;
  throw FormatError("unknown norm '" + std::string(text) + "' (expected linf, l2 or l1)");
}

Budget::Budget(Norm norm_in, double epsilon_in) : norm(norm_in), epsilon(epsilon_in) {
  require(std::isfinite(epsilon) && epsilon >= 0.0, "Budget: epsilon must be finite and >= 0");
}

double norm_p(const Vector& v, Norm norm) {
  double acc = 0.0;
  switch (norm) {
    case Norm::Linf:
      for (double x : v) acc = std::max(acc, std::abs(x));
      return acc;
    case Norm::L2:
      for (double x : v) acc += x * x;
      return std::sqrt(acc);
    case Norm::L1:
      for (double x : v) acc += std::abs(x);
      return acc;
  }
  return acc;
}

Vector project_linf(const Vector& v, double epsilon) {
  Vector out = v;
  for (double& x : out) x = std::clamp(x, -epsilon, epsilon);
  return out;
}

Vector project_l2(const Vector& v, double epsilon) {
  const double length = norm_p(v, Norm::L2);
  if (length <= epsilon) return v;
  if (epsilon == 0.0) return Vector(v.dim());
  return (epsilon / length) * v;
}

Vector project_l1(const Vector& v, double epsilon) {
  if (norm_p(v, Norm::L1) <= epsilon) return v;
  if (epsilon == 0.0) return Vector(v.dim());

  // Magnitudes in decreasing order, ties by coordinate index.
  std::vector<std::size_t> order(v.dim());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(v[a]) > std::abs(v[b]); });

  // Largest rho with |v|_(rho) > (sum_{i<=rho} |v|_(i) - eps) / rho.
  double prefix = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < order.size(); ++j) {
    const double u = std::abs(v[order[j]]);
    prefix += u;
    const double candidate = (prefix - epsilon) / static_cast<double>(j + 1);
    if (u - candidate > 0.0) theta = candidate;
    else break;
  }

  Vector out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) {
    const double shrunk = std::max(std::abs(v[i]) - theta, 0.0);
    out[i] = std::copysign(shrunk, v[i]);
  }
  return out;
}

Vector project(const Vector& v, const Budget& budget) {
  switch (budget.norm) {
    case Norm::Linf: return project_linf(v, budget.epsilon);
    case Norm::L2: return project_l2(v, budget.epsilon);
    case Norm::L1: return project_l1(v, budget.epsilon);
  }
  return v;
}

Vector project_vjp(const Vector& v, const Vector& grad, const Budget& budget) {
  require_same_dim(v, grad, "project_vjp");
  if (norm_p(v, budget.norm) <= budget.epsilon) return grad;
  const double eps = budget.epsilon;
  Vector out(v.dim());
  if (budget.norm == Norm::Linf) {
    for (std::size_t i = 0; i < v.dim(); ++i) out[i] = std::abs(v[i]) > eps ? 0.0 : grad[i];
  } else if (budget.norm == Norm::L2) {
    // (eps / r) (I - u u^T) with u = v / r.
    const double r = norm_p(v, Norm::L2);
    out = grad;
    axpy(-dot(grad, v) / (r * r), v, out);
    out *= eps / r;
  } else {
    // On the support S with signs s: I_S - s s^T / |S|.
    const Vector p = project_l1(v, eps);
    double along = 0.0;
    std::size_t support = 0;
    for (std::size_t i = 0; i < v.dim(); ++i) {
      if (p[i] == 0.0) continue;
      along += std::copysign(1.0, p[i]) * grad[i];
      ++support;
    }
    for (std::size_t i = 0; i < v.dim(); ++i) {
      if (p[i] != 0.0) out[i] = grad[i] - std::copysign(1.0, p[i]) * along / static_cast<double>(support);
    }
  }
  return out;
}

bool within_budget(const Vector& v, const Budget& budget, double rel_tol) {
  return norm_p(v, budget.norm) <= budget.epsilon * (1.0 + rel_tol);
}

Vector clip_box(const Vector& v, double lo, double hi) {
  require(lo <= hi, "clip_box: lo must not exceed hi");
  Vector out = v;
  for (double& x : out) x = std::clamp(x, lo, hi);
  return out;
}

Vector perturbed_input(const Vector& x, const Vector& delta) { return clip_box(x + delta, 0.0, 1.0); }

void mask_box_blocked(Vector& ascent_grad, const Vector& input) {
  require_same_dim(ascent_grad, input, "mask_box_blocked");
  for (std::size_t i = 0; i < input.dim(); ++i) {
    if ((input[i] >= 1.0 && ascent_grad[i] > 0.0) || (input[i] <= 0.0 && ascent_grad[i] < 0.0)) ascent_grad[i] = 0.0;
  }
}

}  // namespace moco
