#include "moco/selftest.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "moco/adam.hpp"
#include "moco/bezier.hpp"
#include "moco/evolution.hpp"
#include "moco/geometry.hpp"
#include "moco/gradcheck.hpp"
#include "moco/model.hpp"
#include "moco/rng.hpp"

namespace moco {

namespace {

using Projector = std::function<Vector(const Vector&, const Budget&)>;

Vector radial_l1(const Vector& v, double eps) {
  const double n = norm_p(v, Norm::L1);
  return n <= eps ? v : (eps / n) * v;
}

// Smallest distance from v to the 2-D ball. Outside the ball the nearest
// point is on the sphere, parametrised by angle: a dense angle grid, then a
// shrinking 1-D pattern search around the best angle.
double oracle_distance_2d(const Vector& v, const Budget& b) {
  if (norm_p(v, b.norm) <= b.epsilon) return 0.0;
  auto dist = [&](double theta) {
    const Vector u{std::cos(theta), std::sin(theta)};
    const Vector q = (b.epsilon / norm_p(u, b.norm)) * u;
    return std::hypot(v[0] - q[0], v[1] - q[1]);
  };
  const double two_pi = 2.0 * std::acos(-1.0);
  double h = two_pi / 3600.0;
  double best_theta = 0.0;
  double best = dist(0.0);
  for (int k = 1; k < 3600; ++k) {
    if (dist(k * h) < best) {
      best = dist(k * h);
      best_theta = k * h;
    }
  }
  while (h > 1e-12) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (double step : {-2.0 * h, -h, h, 2.0 * h}) {
        if (dist(best_theta + step) < best) {
          best = dist(best_theta + step);
          best_theta += step;
          moved = true;
        }
      }
    }
    h *= 0.5;
  }
  return best;
}

SelftestCheck check(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

SelftestCheck gradient_check(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t dims[] = {6, 8, 5, 3};
    const Mlp model = Mlp::random_init(dims, rng);
    Vector x(6);
    for (double& xi : x) xi = rng.uniform();
    const std::size_t y = rng.below(3);
    const Vector analytic = model.input_grad(x, y);
    const Vector numeric = finite_diff_grad([&](const Vector& p) { return model.loss(p, y); }, x, 1e-5);
    worst = std::max(worst, max_relative_error(analytic, numeric));
  }
  std::ostringstream d;
  d << "max relative error " << worst;
  return check("input-gradient", worst < 1e-4, d.str());
}

std::vector<SelftestCheck> projection_checks(Rng& rng, const Projector& proj) {
  std::vector<SelftestCheck> out;
  for (Norm norm : kAllNorms) {
    double worst_gap = 0.0, worst_idem = 0.0;
    bool feasible = true;
    for (int trial = 0; trial < 40; ++trial) {
      const Budget b(norm, rng.uniform(0.2, 1.0));
      const Vector v{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
      const Vector p = proj(v, b);
      const double d = std::hypot(v[0] - p[0], v[1] - p[1]);
      worst_gap = std::max(worst_gap, std::abs(d - oracle_distance_2d(v, b)));
      worst_idem = std::max(worst_idem, max_abs_diff(proj(p, b), p));
      feasible = feasible && norm_p(p, norm) <= b.epsilon * (1.0 + 1e-9);
    }
    const std::string n(norm_name(norm));
    std::ostringstream g, i;
    g << "max distance gap " << worst_gap;
    i << "max drift " << worst_idem;
    out.push_back(check("projection-nearest-" + n, worst_gap <= 1e-5, g.str()));
    out.push_back(check("projection-idempotent-" + n, worst_idem <= 1e-12, i.str()));
    out.push_back(check("projection-feasible-" + n, feasible, feasible ? "all inside" : "point outside ball"));
  }
  return out;
}

std::vector<SelftestCheck> bezier_checks(Rng& rng) {
  const std::size_t dim = 5;
  Vector d1(dim), d2(dim), c(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    d1[i] = rng.uniform(-1, 1);
    d2[i] = rng.uniform(-1, 1);
    c[i] = rng.uniform(-1, 1);
  }
  const BezierPath path(d1, d2, c, Budget(Norm::Linf, 1.0));
  const bool ends = eval_curve(path, 0.0) == d1 && eval_curve(path, 1.0) == d2;
  const BezierPath line = linear_path(d1, d2, Budget(Norm::Linf, 1.0));
  double worst = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double t = k / 100.0;
    worst = std::max(worst, max_abs_diff(eval_curve(line, t), (1.0 - t) * d1 + t * d2));
  }
  std::ostringstream d;
  d << "max deviation " << worst;
  return {check("bezier-endpoints", ends, ends ? "exact" : "endpoint mismatch"),
          check("bezier-midpoint-is-linear", worst <= 1e-12, d.str())};
}

SelftestCheck adam_check() {
  AdamState s(1);
  Vector p{0.0};
  p = adam_step(s, p, Vector{1.0});
  const double one = p[0];
  p = adam_step(s, p, Vector{1.0});
  const bool ok = std::abs(one + 0.0099999999) < 1e-10 && std::abs(p[0] + 0.0199999998) < 1e-10;
  std::ostringstream d;
  d.precision(12);
  d << "steps " << one << ", " << p[0];
  return check("adam-examples", ok, d.str());
}

SelftestCheck ledger_check(Rng& rng) {
  std::ostringstream d;
  bool ok = true;
  for (int run = 0; run < 4; ++run) {
    const std::size_t dims[] = {8, 12, 3};
    const Mlp model = Mlp::random_init(dims, rng);
    Vector x(8);
    for (double& xi : x) xi = rng.uniform();
    const std::size_t y = model.forward(x).predicted();
    for (CrossoverKind kind : {CrossoverKind::Bezier, CrossoverKind::Uniform}) {
      EaConfig cfg(Budget(Norm::Linf, 0.01));
      cfg.crossover = kind;
      cfg.max_generations = 2;
      QueryLedger ledger;
      const AttackResult r = run_ea(model, x, y, cfg, rng.next_u64(), ledger);
      const std::uint64_t per_round = kind == CrossoverKind::Bezier ? 345 : 30;
      const std::uint64_t expected = 30 + per_round * static_cast<std::uint64_t>(r.generations);
      if (r.forwards != expected) {
        ok = false;
        d << crossover_name(kind) << " logged " << r.forwards << " expected " << expected << "; ";
      }
    }
  }
  return check("ledger-arithmetic", ok, ok ? "30 + 345 g (bezier), 30 + 30 g (uniform)" : d.str());
}

}  // namespace

std::vector<SelftestCheck> run_selftest(const SelftestOptions& options) {
  Rng base(derive_seed(options.seed, "selftest", 0));
  Projector proj = [](const Vector& v, const Budget& b) { return project(v, b); };
  if (options.corrupt_l1_projection) {
    proj = [](const Vector& v, const Budget& b) {
      return b.norm == Norm::L1 ? radial_l1(v, b.epsilon) : project(v, b);
    };
  }
  std::vector<SelftestCheck> out;
  Rng g = base.split(0);
  out.push_back(gradient_check(g));
  Rng p = base.split(1);
  for (auto& c : projection_checks(p, proj)) out.push_back(std::move(c));
  Rng b = base.split(2);
  for (auto& c : bezier_checks(b)) out.push_back(std::move(c));
  out.push_back(adam_check());
  Rng l = base.split(3);
  out.push_back(ledger_check(l));
  return out;
}

}  // namespace moco
