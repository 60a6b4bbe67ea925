#include <gtest/gtest.h>

#include "printers.hpp"

#include <cmath>

#include "fixtures.hpp"
#include "moco/bezier.hpp"
#include "moco/error.hpp"
#include "moco/geometry.hpp"
#include "moco/gradcheck.hpp"
#include "moco/pgd.hpp"
#include "oracles.hpp"

using namespace moco;

namespace {

Vector random_vector(Rng& r, std::size_t dim, double scale) {
  Vector v(dim);
  for (double& x : v) x = r.uniform(-scale, scale);
  return v;
}

// Two successful PGD endpoints on a toy sample.
BezierPath toy_path(const Sample& s, const Budget& b, std::uint64_t seed) {
  const auto& toy = fixture::toy();
  QueryLedger ledger;
  const EndpointPair p =
      pgd_endpoint_pair(toy.model, s.x, s.label, PgdConfig::standard(b, 0), {seed, seed + 1}, ledger);
  return linear_path(p.first.delta, p.second.delta, b);
}

}  // namespace

TEST(Curve, EndpointsAreExact) {
  Rng r(1);
  for (int trial = 0; trial < 100; ++trial) {
    const BezierPath p(random_vector(r, 7, 1.0), random_vector(r, 7, 1.0), random_vector(r, 7, 1.0),
                       Budget(Norm::L2, 1.0));
    ASSERT_EQ(eval_curve(p, 0.0), p.delta1);
    ASSERT_EQ(eval_curve(p, 1.0), p.delta2);
  }
}

TEST(Curve, MatchesDeCasteljau) {
  Rng r(2);
  const BezierPath p(random_vector(r, 5, 1.0), random_vector(r, 5, 1.0), random_vector(r, 5, 1.0),
                     Budget(Norm::Linf, 1.0));
  for (int k = 0; k <= 100; ++k) {
    const double t = k / 100.0;
    const Vector ref(oracle::de_casteljau(p.delta1.raw(), p.control.raw(), p.delta2.raw(), t));
    ASSERT_LE(max_abs_diff(eval_curve(p, t), ref), 1e-15);
  }
}

TEST(Curve, MidpointControlIsTheSegment) {
  Rng r(3);
  const Vector d1 = random_vector(r, 9, 2.0), d2 = random_vector(r, 9, 2.0);
  const BezierPath line = linear_path(d1, d2, Budget(Norm::L1, 3.0));
  EXPECT_EQ(line.control, midpoint(d1, d2));
  EXPECT_LE(max_abs_diff(eval_curve(line, 0.5), 0.5 * (d1 + d2)), 1e-15);
  for (int k = 0; k <= 100; ++k) {
    const double t = k / 100.0;
    ASSERT_LE(max_abs_diff(eval_curve(line, t), (1.0 - t) * d1 + t * d2), 1e-12);
  }
}

TEST(Curve, RejectsBadInput) {
  const BezierPath p(Vector(2), Vector(2), Vector(2), Budget(Norm::L2, 1.0));
  EXPECT_THROW(eval_curve(p, -0.01), ContractViolation);
  EXPECT_THROW(eval_curve(p, 1.01), ContractViolation);
  EXPECT_THROW(BezierPath(Vector(2), Vector(3), Vector(2), Budget(Norm::L2, 1.0)), ContractViolation);
}

TEST(Curve, JsonRoundTrip) {
  Rng r(4);
  const BezierPath p(random_vector(r, 6, 1.0), random_vector(r, 6, 1.0), random_vector(r, 6, 1.0),
                     Budget(Norm::L1, 2.5));
  const BezierPath q = path_from_json(path_to_json(p));
  EXPECT_EQ(q.delta1, p.delta1);
  EXPECT_EQ(q.delta2, p.delta2);
  EXPECT_EQ(q.control, p.control);
  EXPECT_EQ(q.budget.norm, Norm::L1);
  EXPECT_EQ(q.budget.epsilon, 2.5);
  EXPECT_THROW(path_from_json("{\"delta1\": [1]"), FormatError);
}

TEST(Grid, EvaluationPoints) {
  const auto g50 = evaluation_grid(50);
  EXPECT_DOUBLE_EQ(g50.front(), 0.02);
  EXPECT_NEAR(g50[49], 0.98, 1e-15);
  const auto g2 = evaluation_grid(2);
  EXPECT_DOUBLE_EQ(g2[0], 0.02);
  EXPECT_DOUBLE_EQ(g2[1], 0.98);
  EXPECT_THROW(evaluation_grid(1), ContractViolation);
  // The 50-point grid is every other point of the 100-point grid only up to
  // rounding; coverage uses index subsets, so check that the spacing halves.
  const auto g100 = evaluation_grid(100);
  EXPECT_NEAR(g100[1] - g100[0], 0.96 / 99.0, 1e-15);
}

TEST(Grid, SampledPointsAreFeasible) {
  Rng r(5);
  for (Norm n : kAllNorms) {
    const Budget b(n, 0.4);
    const BezierPath p(project(random_vector(r, 8, 1.0), b), project(random_vector(r, 8, 1.0), b),
                       random_vector(r, 8, 3.0), b);
    for (const PathPoint& pt : sample_path_points(p, 50)) {
      ASSERT_LE(norm_p(pt.point, n), b.epsilon * (1.0 + 1e-9));
    }
  }
}

TEST(Objective, StructureIsValidated) {
  const Sample a{Vector(2), 0}, b{Vector(2), 0}, c{Vector(2), 1};
  EXPECT_NO_THROW(CurveObjective::make(Setting::A, {a}, {}));
  EXPECT_THROW(CurveObjective::make(Setting::A, {a, b}, {}), ContractViolation);
  EXPECT_NO_THROW(CurveObjective::make(Setting::B, {a, b}, {}));
  EXPECT_THROW(CurveObjective::make(Setting::B, {a, c}, {}), ContractViolation);
  EXPECT_NO_THROW(CurveObjective::make(Setting::C, {a, c}, {}));
  EXPECT_THROW(CurveObjective::make(Setting::C, {a, b}, {}), ContractViolation);
  EXPECT_THROW(CurveObjective::make(Setting::A, {a}, {}, 0.5, 0.5), ContractViolation);
  EXPECT_THROW(CurveObjective::make(Setting::A, {a}, {}, 1.0, -0.1), ContractViolation);
  EXPECT_EQ(parse_setting("B"), Setting::B);
  EXPECT_THROW(parse_setting("D"), FormatError);
}

TEST(PathLoss, SettingSpecialisations) {
  const auto& toy = fixture::toy();
  const Sample& s = toy.correct_test[0];
  const Sample& s2 = toy.correct_test[1];
  const Budget b(Norm::Linf, 0.1);
  Rng r(6);
  const BezierPath p(random_vector(r, s.x.dim(), 0.1), random_vector(r, s.x.dim(), 0.1),
                     random_vector(r, s.x.dim(), 0.3), b);
  QueryLedger ledger;
  const double t = 0.37;
  const double a_val = path_loss(CurveObjective::make(Setting::A, {s}, {}), p, t, toy.model, ledger);
  EXPECT_DOUBLE_EQ(a_val, toy.model.loss(perturbed_input(s.x, project(eval_curve(p, t), b)), s.label));
  EXPECT_EQ(ledger.forwards(), 1u);

  // Zero aux weight ignores the aux set.
  const double no_aux = path_loss(CurveObjective::make(Setting::A, {s}, {s2, s2}, 1.0, 0.0), p, t, toy.model, ledger);
  EXPECT_DOUBLE_EQ(no_aux, a_val);

  // Setting B on two copies of one image equals Setting A.
  const double b_val = path_loss(CurveObjective::make(Setting::B, {s, s}, {}), p, t, toy.model, ledger);
  EXPECT_NEAR(b_val, a_val, 1e-15);

  // Setting C built with equal labels reduces to Setting B exactly.
  Sample s2_same = s2;
  s2_same.label = s.label;
  CurveObjective c_obj{Setting::C, {s, s2_same}, {}, 1.0, 0.5};
  const double c_val = path_loss(c_obj, p, t, toy.model, ledger);
  EXPECT_EQ(c_val, path_loss(CurveObjective::make(Setting::B, {s, s2_same}, {}), p, t, toy.model, ledger));

  // Weighted average with aux cases.
  QueryLedger l2;
  const double mixed = path_loss(CurveObjective::make(Setting::A, {s}, {s2}, 1.0, 0.5), p, t, toy.model, l2);
  const Vector pt = project(eval_curve(p, t), b);
  const double expected = (toy.model.loss(perturbed_input(s.x, pt), s.label) +
                           0.5 * toy.model.loss(perturbed_input(s2.x, pt), s2.label)) / 1.5;
  EXPECT_NEAR(mixed, expected, 1e-14);
  EXPECT_EQ(l2.forwards(), 2u);
}

TEST(Optimize, ZeroIterationsKeepsMidpoint) {
  const auto& toy = fixture::toy();
  const Sample& s = toy.correct_test[0];
  Rng r(7);
  const BezierPath p(random_vector(r, s.x.dim(), 0.05), random_vector(r, s.x.dim(), 0.05),
                     random_vector(r, s.x.dim(), 0.05), Budget(Norm::Linf, 0.05));
  OptimizeConfig cfg;
  cfg.iterations = 0;
  QueryLedger ledger;
  const BezierPath out = optimize_control(CurveObjective::make(Setting::A, {s}, {}), p, cfg, toy.model, ledger);
  EXPECT_EQ(out.control, midpoint(p.delta1, p.delta2));
  EXPECT_EQ(ledger.forwards(), 0u);
}

TEST(Optimize, FirstStepFollowsFiniteDifferenceAscent) {
  // Large budget and an interior input keep projection and clipping inactive,
  // so the first Adam step is lr * sign(dJ/dc) per coordinate.
  Rng r(8);
  const std::size_t dims[] = {5, 7, 3};
  const Mlp m = Mlp::random_init(dims, r);
  const Sample s{Vector{0.4, 0.5, 0.45, 0.55, 0.6}, 1};
  const Budget b(Norm::L2, 100.0);
  const BezierPath p(random_vector(r, 5, 0.05), random_vector(r, 5, 0.05), Vector(5), b);
  OptimizeConfig cfg;
  cfg.iterations = 1;
  cfg.fixed_t = {0.2, 0.5, 0.9};
  const CurveObjective obj = CurveObjective::make(Setting::A, {s}, {});
  QueryLedger ledger;
  const BezierPath out = optimize_control(obj, p, cfg, m, ledger);
  EXPECT_EQ(ledger.forwards(), 3u);
  EXPECT_EQ(ledger.backwards(), 3u);

  const Vector mid = midpoint(p.delta1, p.delta2);
  auto objective = [&](const Vector& c) {
    double acc = 0.0;
    for (double t : cfg.fixed_t) {
      const Vector pt(oracle::de_casteljau(p.delta1.raw(), c.raw(), p.delta2.raw(), t));
      acc += m.loss(s.x + pt, s.label);
    }
    return acc / 3.0;
  };
  const Vector fd = finite_diff_grad(objective, mid, 1e-6);
  for (std::size_t i = 0; i < 5; ++i) {
    ASSERT_GT(std::abs(fd[i]), 1e-3);
    EXPECT_NEAR(out.control[i] - mid[i], std::copysign(0.01, fd[i]), 1e-6) << i;
  }
}

TEST(Optimize, EndpointsPinnedAndSeedDeterministic) {
  const auto& toy = fixture::toy();
  const Sample& s = toy.correct_test[2];
  const BezierPath p = toy_path(s, Budget(Norm::L2, 1.0), 11);
  OptimizeConfig cfg;
  cfg.seed = 99;
  QueryLedger l1, l2;
  const CurveObjective obj = CurveObjective::make(Setting::A, {s}, {});
  const BezierPath a = optimize_control(obj, p, cfg, toy.model, l1);
  const BezierPath b = optimize_control(obj, p, cfg, toy.model, l2);
  EXPECT_EQ(a.delta1, p.delta1);
  EXPECT_EQ(a.delta2, p.delta2);
  EXPECT_EQ(a.control, b.control);
  EXPECT_EQ(l1.forwards(), 30u * 20u);
  EXPECT_EQ(l1.backwards(), 30u * 20u);
}

TEST(Optimize, ObserverSeesEveryIteration) {
  const auto& toy = fixture::toy();
  const Sample& s = toy.correct_test[2];
  const BezierPath p = toy_path(s, Budget(Norm::Linf, 0.1), 3);
  OptimizeConfig cfg;
  cfg.iterations = 7;
  QueryLedger ledger;
  std::vector<int> seen;
  optimize_control(CurveObjective::make(Setting::A, {s}, {}), p, cfg, toy.model, ledger,
                   [&](int done, const BezierPath&) { seen.push_back(done); });
  EXPECT_EQ(seen, (std::vector<int>{1, 2, 3, 4, 5, 6, 7}));
}

TEST(Optimize, RaisesMeanPathLossOnNinetyPercentOfCases) {
  const auto& toy = fixture::toy();
  int improved = 0, total = 0;
  for (Norm n : kAllNorms) {
    const Budget b(n, n == Norm::Linf ? 0.05 : (n == Norm::L2 ? 0.6 : 5.0));
    for (std::size_t i = 0; i < 10; ++i) {
      const Sample& s = toy.correct_test[i];
      const BezierPath line = toy_path(s, b, 100 + i);
      const CurveObjective obj = CurveObjective::make(Setting::A, {s}, {});
      OptimizeConfig cfg;
      cfg.seed = i;
      QueryLedger ledger;
      const BezierPath opt = optimize_control(obj, line, cfg, toy.model, ledger);
      double before = 0.0, after = 0.0;
      for (double t : evaluation_grid(50)) {
        before += path_loss(obj, line, t, toy.model, ledger);
        after += path_loss(obj, opt, t, toy.model, ledger);
      }
      improved += after >= before;
      ++total;
    }
  }
  EXPECT_GE(improved, static_cast<int>(std::ceil(0.9 * total)));
}

TEST(Objective, MonteCarloEstimateIsUnbiased) {
  const auto& toy = fixture::toy();
  const Sample& s = toy.correct_test[4];
  const Budget b(Norm::Linf, 0.1);
  Rng r(12);
  const BezierPath p(random_vector(r, s.x.dim(), 0.1), random_vector(r, s.x.dim(), 0.1),
                     random_vector(r, s.x.dim(), 0.2), b);
  const CurveObjective obj = CurveObjective::make(Setting::A, {s}, {});
  QueryLedger ledger;
  std::vector<double> draws;
  for (int i = 0; i < 10000; ++i) draws.push_back(path_loss(obj, p, r.uniform(), toy.model, ledger));
  const auto [mean, sd] = oracle::mean_std(draws);
  const int n = 1000;
  double trap = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    trap += w * path_loss(obj, p, static_cast<double>(k) / n, toy.model, ledger);
  }
  trap /= n;
  EXPECT_LE(std::abs(mean - trap), 2.0 * sd / std::sqrt(10000.0));
}

TEST(Connectivity, ReportDefinitions) {
  const auto& toy = fixture::toy();
  const Sample& s1 = toy.correct_test[0];
  Sample s2 = toy.correct_test[1];
  const Budget b(Norm::Linf, 0.08);
  for (std::size_t i = 0; i < 5; ++i) {
    const BezierPath p = toy_path(toy.correct_test[i], b, 40 + i);
    QueryLedger ledger;
    const ConnectivityReport two = evaluate_connectivity(p, {s1, s2}, 50, toy.model, ledger);
    EXPECT_EQ(ledger.forwards(), 100u);
    EXPECT_LE(two.asr_both, std::min(*two.asr1(), *two.asr2()) + 1e-12);
    EXPECT_NEAR(two.asr_avg, 0.5 * (*two.asr1() + *two.asr2()), 1e-12);
    EXPECT_EQ(two.hits.size(), 50u);
    const ConnectivityReport one = evaluate_connectivity(p, {s1}, 50, toy.model, ledger);
    EXPECT_FALSE(one.asr1().has_value());
    EXPECT_EQ(one.asr_avg, one.asr_both);
  }
}

TEST(Connectivity, AllPointsFoolingGivesFullAsr) {
  // A model that always predicts class 1 is fooled on a class-0 image everywhere.
  const Mlp m({DenseLayer{2, 2, {0.0, 0.0, 0.0, 0.0}, Vector{0.0, 1.0}}});
  const BezierPath p(Vector{0.1, 0.0}, Vector{0.0, 0.1}, Vector{0.05, 0.05}, Budget(Norm::L2, 0.2));
  QueryLedger ledger;
  const ConnectivityReport rep = evaluate_connectivity(p, {Sample{Vector{0.5, 0.5}, 0}}, 50, m, ledger);
  EXPECT_DOUBLE_EQ(rep.asr_both, 100.0);
  EXPECT_THROW(evaluate_connectivity(p, {}, 50, m, ledger), ContractViolation);
}
